#include "sfdg/io.hpp"

#include <filesystem>
#include <iomanip>

namespace sfdg {

void ensure_directory(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir))
        throw IoError("cannot create output directory '" + dir + "'" + (ec ? ": " + ec.message() : ""));
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot write '" + path + "'");
    return out;
}

void write_text_file(const std::string& path, const std::string& text) {
    auto out = open_output(path);
    out << text;
    if (!out)
        throw IoError("write failed for '" + path + "'");
}

std::vector<double> cell_means(const DofVector& z) {
    std::vector<double> m(static_cast<std::size_t>(z.elements()));
    for (index_t e = 0; e < z.elements(); ++e)
        m[static_cast<std::size_t>(e)] = z.block(e)[0];
    return m;
}

void write_vtk_cell_means(const std::string& path, const StructuredMesh& mesh, const DofVector& z,
                          const std::string& field) {
    if (z.elements() != mesh.num_elements())
        throw std::invalid_argument("write_vtk_cell_means: vector does not match the mesh");
    auto out = open_output(path);
    const auto& cfg = mesh.config();
    const int d = mesh.dim();
    const auto h = mesh.width();
    out << "# vtk DataFile Version 3.0\n" << "cell means\n" << "ASCII\n" << "DATASET STRUCTURED_POINTS\n";
    out << "DIMENSIONS";
    for (int k = 0; k < 3; ++k)
        out << ' ' << (k < d ? mesh.cells(k) + 1 : 1);
    out << "\nORIGIN";
    for (int k = 0; k < 3; ++k)
        out << ' ' << (k < d ? cfg.lo[k] : 0.0);
    out << "\nSPACING";
    for (int k = 0; k < 3; ++k)
        out << ' ' << (k < d ? h[k] : 1.0);
    out << "\nCELL_DATA " << mesh.num_elements() << "\n";
    out << "SCALARS " << field << " double 1\nLOOKUP_TABLE default\n";
    out << std::setprecision(17);
    for (double v : cell_means(z))
        out << v << '\n';
    if (!out)
        throw IoError("write failed for '" + path + "'");
}

} // namespace sfdg
