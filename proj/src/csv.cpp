#include "margsmc/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace margsmc {

namespace {

std::string strip(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(const std::string& path, int line, const std::string& what) {
  throw std::runtime_error(path + ":" + std::to_string(line) + ": " + what);
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const Eigen::MatrixXd& data) {
  if (data.cols() != static_cast<Eigen::Index>(header.size()))
    throw std::invalid_argument("write_csv: header width does not match data columns");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_csv: cannot open " + path);
  for (size_t j = 0; j < header.size(); ++j) {
    if (j) out << ',';
    out << header[j];
  }
  out << '\n';
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    for (Eigen::Index j = 0; j < data.cols(); ++j) {
      if (j) out << ',';
      out << format_double(data(i, j));
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("write_csv: write failed for " + path);
}

Eigen::VectorXd load_observations(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_observations: cannot open " + path);

  std::string line;
  if (!std::getline(in, line)) fail(path, 1, "empty file");
  if (strip(line) != "t,y") fail(path, 1, "expected header `t,y`, got `" + strip(line) + "`");

  std::vector<double> ys;
  int lineno = 1;
  long expected_t = 1;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string row = strip(line);
    if (row.empty()) {
      if (in.peek() != EOF) fail(path, lineno, "blank row");
      break;
    }
    const size_t comma = row.find(',');
    if (comma == std::string::npos) fail(path, lineno, "expected two comma-separated fields");
    const std::string tf = strip(row.substr(0, comma));
    const std::string yf = strip(row.substr(comma + 1));
    if (yf.find(',') != std::string::npos) fail(path, lineno, "expected two comma-separated fields");

    long t = 0;
    auto tres = std::from_chars(tf.data(), tf.data() + tf.size(), t);
    if (tres.ec != std::errc{} || tres.ptr != tf.data() + tf.size())
      fail(path, lineno, "t is not an integer: `" + tf + "`");
    if (t != expected_t) {
      if (t < expected_t) fail(path, lineno, "t must ascend from 1 without duplicates");
      fail(path, lineno, "gap in t (expected " + std::to_string(expected_t) + ")");
    }

    double y = 0.0;
    auto yres = std::from_chars(yf.data(), yf.data() + yf.size(), y);
    if (yres.ec != std::errc{} || yres.ptr != yf.data() + yf.size())
      fail(path, lineno, "y is not a number: `" + yf + "`");

    ys.push_back(y);
    ++expected_t;
  }
  if (ys.empty()) fail(path, lineno, "no observation rows");
  return Eigen::Map<Eigen::VectorXd>(ys.data(), static_cast<Eigen::Index>(ys.size()));
}

}  // namespace margsmc
