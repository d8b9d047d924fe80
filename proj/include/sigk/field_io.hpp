#pragma once

#include <string>

#include "sigk/grid.hpp"

namespace sigk {

/// First line: axis sizes followed by lo,hi per axis. Then one value per line, row-major.
void write_field_csv(const std::string& path, const ScalarField& u);
[[nodiscard]] ScalarField read_field_csv(const std::string& path);
/// JSON sidecar with dim, sizes, bounds, spacing and a provenance string.
void write_field_sidecar(const std::string& path, const ScalarField& u, const std::string& provenance);

}  // namespace sigk
