#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "hypoprop/analysis.hpp"
#include "hypoprop/gridprop.hpp"
#include "hypoprop/matcore.hpp"
#include "hypoprop/packets.hpp"

namespace hypoprop::io {

using nlohmann::json;

/// {"m": 2, "Q": [[...]], "B": [[...]]}. Q may be asymmetric by up to 1e-9
/// absolute; it is then replaced by (Q + Q^T)/2.
SystemPair system_from_json(const json& j);
json system_to_json(const SystemPair& sys);
SystemPair load_system(const std::string& path);

/// {"m", "M_re", "M_im", "w_re", "w_im", "c_re", "c_im"}; the imaginary parts
/// and w default to zero, c to 1.
GaussianPacket packet_from_json(const json& j);
json packet_to_json(const GaussianPacket& P);
GaussianPacket load_packet(const std::string& path);

/// 17 significant digits, '.' decimal point regardless of locale.
std::string format_double(double v);

/// Header "x1[,x2],re,im" (or "xi1[,xi2],re,im"), rows in flat sample order.
void write_field_csv(std::ostream& os, const GridField& F);
/// Reads a position-space CSV and recovers L and n from the node coordinates.
GridField read_field_csv(std::istream& is);
GridField load_field_csv(const std::string& path);
json field_metadata(const GridField& F);

void write_dispersion_csv(std::ostream& os, const std::vector<DispersionReport>& rows);
void write_hardy_csv(std::ostream& os, const std::vector<HardyReport>& rows);

}  // namespace hypoprop::io
