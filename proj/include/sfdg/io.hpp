#pragma once

#include "sfdg/mesh.hpp"
#include "sfdg/operator.hpp"

#include <fstream>
#include <string>

namespace sfdg {

/// Creates the directory (and parents); IoError on failure.
void ensure_directory(const std::string& dir);
/// Opens a file for writing; IoError on failure.
std::ofstream open_output(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

/// Cell means on the reference cell: the theta_0 x ... x theta_0 coefficient
/// times the basis normalization (theta_0 = 1).
std::vector<double> cell_means(const DofVector& z);

/// VTK legacy ASCII STRUCTURED_POINTS with one cell scalar per element, laid
/// out on the logical grid of the mesh.
void write_vtk_cell_means(const std::string& path, const StructuredMesh& mesh, const DofVector& z,
                          const std::string& field = "u");

} // namespace sfdg
