#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace margsmc {

// 17 significant digits, locale-independent: enough to round-trip any double
// bit-exactly, so reruns can be compared byte for byte.
std::string format_double(double v);

// Writes header + rows; one column per header entry, LF line endings.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const Eigen::MatrixXd& data);

// Reads an observation file with header `t,y`: integer t ascending from 1
// with no gaps or duplicates. Throws std::runtime_error naming the offending
// line on any malformed input.
Eigen::VectorXd load_observations(const std::string& path);

}  // namespace margsmc
