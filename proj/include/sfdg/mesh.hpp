#pragma once

#include "sfdg/basis.hpp"
#include "sfdg/sumfact.hpp"
#include "sfdg/types.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace sfdg {

enum class BoundaryClass { interior, dirichlet, neumann, outflow };
enum class GeometryClass { axis_parallel, affine, multilinear };

std::string to_string(BoundaryClass c);
std::string to_string(GeometryClass c);
BoundaryClass boundary_class_from_string(const std::string& s);
GeometryClass geometry_class_from_string(const std::string& s);

using Mat3 = std::array<std::array<double, kMaxDim>, kMaxDim>;

struct MeshConfig {
    int dim = 2;
    DimArray<index_t> cells{4, 4, 4};
    DimArray<double> lo{0.0, 0.0, 0.0};
    DimArray<double> hi{1.0, 1.0, 1.0};
    DimArray<bool> periodic{false, false, false};
    /// boundary[k][0] is the low side x_k = lo_k, boundary[k][1] the high side.
    std::array<std::array<BoundaryClass, 2>, kMaxDim> boundary{{{BoundaryClass::dirichlet, BoundaryClass::dirichlet},
                                                                {BoundaryClass::dirichlet, BoundaryClass::dirichlet},
                                                                {BoundaryClass::dirichlet, BoundaryClass::dirichlet}}};
    GeometryClass geometry = GeometryClass::axis_parallel;
    /// affine geometry: x = lo + M (y - lo) for grid point y
    Mat3 affine{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
    /// multilinear geometry: vertex displacement amplitude as a fraction of the cell width
    double perturbation = 0.0;
    std::uint64_t seed = 1;
};

struct FaceInfo {
    index_t minus = -1;
    index_t plus = -1; ///< -1 on boundary faces
    int normal = 0;    ///< direction q_F (0-based), identical on both sides
    FaceEnd minus_end = FaceEnd::high;
    FaceEnd plus_end = FaceEnd::low;
    std::array<int, kMaxDim> perm_minus{0, 1, 2};
    std::array<int, kMaxDim> perm_plus{0, 1, 2};
    BoundaryClass cls = BoundaryClass::interior;

    bool interior() const { return cls == BoundaryClass::interior; }
};

/// Reference-to-physical map of one element.
struct GeometryMapping {
    GeometryClass cls = GeometryClass::axis_parallel;
    int dim = 2;
    Mat3 jacobian{};       ///< constant Jacobian (axis-parallel, affine)
    DimArray<double> offset{}; ///< x(0)
    std::array<DimArray<double>, 8> corners{}; ///< lexicographic, corner bit q = direction q

    DimArray<double> map(const DimArray<double>& xhat) const;
};

class StructuredMesh {
public:
    explicit StructuredMesh(const MeshConfig& config);

    const MeshConfig& config() const { return cfg_; }
    int dim() const { return cfg_.dim; }
    index_t cells(int k) const { return cfg_.cells[k]; }
    bool periodic(int k) const { return cfg_.periodic[k]; }
    GeometryClass geometry() const { return cfg_.geometry; }
    /// Jacobian identical on every element (axis-parallel and affine meshes).
    bool constant_jacobian() const { return cfg_.geometry != GeometryClass::multilinear; }
    BoundaryClass boundary(int k, int side) const { return cfg_.boundary[k][side]; }

    index_t num_elements() const { return num_elements_; }
    DimArray<index_t> element_index(index_t e) const;
    index_t element_id(const DimArray<index_t>& idx) const;
    /// Neighbor across the low (side 0) or high (side 1) face in direction k, -1 on the boundary.
    index_t neighbor(index_t e, int k, int side) const;

    /// Interior faces grouped by direction, each in owner order; then boundary
    /// faces by direction, low side before high side.
    const std::vector<FaceInfo>& faces() const { return faces_; }
    index_t num_interior_faces() const { return num_interior_; }
    index_t num_boundary_faces() const { return static_cast<index_t>(faces_.size()) - num_interior_; }

    GeometryMapping mapping(index_t e) const;
    double cell_volume(index_t e) const;
    double face_area(const FaceInfo& f) const;
    /// Smallest cell width over directions (grid spacing before mapping).
    double min_width() const;
    DimArray<double> width() const;
    /// Largest cell diameter, used as the length scale of degeneracy checks.
    double scale() const { return scale_; }

private:
    DimArray<double> vertex(const DimArray<index_t>& vidx) const;

    MeshConfig cfg_;
    index_t num_elements_ = 0;
    index_t num_interior_ = 0;
    std::vector<FaceInfo> faces_;
    std::vector<double> volumes_;
    double scale_ = 1.0;
};

StructuredMesh build_mesh(const MeshConfig& config);

/// Same face list as StructuredMesh::faces(); every interior face appears once.
std::vector<FaceInfo> iterate_faces_once(const StructuredMesh& mesh);

/// Geometry at the m^d volume points of one element. Matrices are row-major d x d.
struct VolumeGeometry {
    index_t points = 0;
    bool constant = false;     ///< S and det identical at all points
    std::vector<double> s;     ///< S = J^{-T}, d*d per point (one entry if constant)
    std::vector<double> det;   ///< Delta_T, per point (one entry if constant)
    std::vector<double> x;     ///< physical coordinates, d per point
};

/// Geometry at the m^(d-1) face points, ordered by ascending tangential directions.
struct FaceGeometry {
    index_t points = 0;
    bool constant = false;
    std::vector<double> s_minus; ///< d*d per point
    std::vector<double> s_plus;  ///< d*d per point (interior faces only)
    std::vector<double> area;    ///< Delta_F per point
    std::vector<double> nu;      ///< unit normal from T^- to T^+ (outward on the boundary), d per point
    std::vector<double> x;       ///< d per point
};

/// Per-thread evaluator of geometry data; the multilinear path evaluates the
/// Q1 map and its Jacobian by sum factorization of the corner coordinates.
class GeometryEvaluator {
public:
    GeometryEvaluator(const StructuredMesh& mesh, const QuadratureRule1D& quad);

    void volume(index_t e, VolumeGeometry& out);
    void face(const FaceInfo& f, FaceGeometry& out);

    const KernelStats& stats() const { return ws_.stats; }
    void reset_stats() { ws_.stats = KernelStats{}; }

private:
    void jacobians_volume(index_t e);
    void jacobians_face(index_t e, int normal, FaceEnd end);
    void fold_into_other(const KernelStats& before, std::uint64_t fma);

    const StructuredMesh* mesh_;
    QuadratureRule1D quad_;
    int d_;
    int m_;
    PackedChain q1_;
    Workspace ws_;
    std::vector<double> corner_;
    std::vector<double> packs_; // per component: lanes [dx/dxhat_1..d, x]
    std::vector<double> jac_;   // d*d per point, J(a,q) = d x_a / d xhat_q
    std::vector<double> xs_;
};

/// S = J^{-T} and det J of a d x d row-major matrix by the adjugate formula.
double invert_transpose(int d, const double* jac, double* s);

} // namespace sfdg
