#include "irs/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "irs/errors.hpp"

namespace irs {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  if constexpr (std::is_floating_point_v<T>) {
    if (value == "inf" || value == "+inf") return std::numeric_limits<T>::infinity();
  }
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc{} || ptr != end) {
    throw ConfigError("config: cannot parse value '" + std::string(value) + "' for key '" +
                      std::string(key) + "'");
  }
  return out;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError("config: " + what);
}

}  // namespace

int default_panel_rows(int n) {
  if (n <= 0) return 1;
  const int pow2 = 1 << static_cast<int>(std::ceil(std::log2(std::sqrt(static_cast<double>(n)))));
  if (n % pow2 == 0) return pow2;
  int best = 1;
  const double root = std::sqrt(static_cast<double>(n));
  for (int d = 1; d <= n; ++d) {
    if (n % d == 0 && std::abs(d - root) < std::abs(best - root)) best = d;
  }
  return best;
}

void SystemConfig::use_default_panel() {
  N1 = default_panel_rows(N);
  N2 = N1 > 0 ? N / N1 : 0;
}

void SystemConfig::validate() const {
  for (auto [name, v] : {std::pair{"M", M}, {"Q", Q}, {"N", N}, {"N1", N1}, {"N2", N2},
                         {"L1", L1}, {"L2", L2}, {"T0", T0}, {"Tp", Tp}, {"Td", Td},
                         {"I", I}, {"K", K}}) {
    require(v > 0, std::string(name) + " must be positive");
  }
  require(N == N1 * N2, "N must equal N1 * N2");
  require(delta >= 0.0 && delta <= 1.0, "delta must lie in [0, 1]");
  require(lambda >= 0.0 && lambda <= 1.0, "lambda must lie in [0, 1]");
  require(!std::isnan(snr_db) && snr_db != -std::numeric_limits<double>::infinity(),
          "snr_db must be a number or +inf");
  const long LL = static_cast<long>(L1) * L2;
  require(T0 >= Q * N, "T0 >= Q*N is required for the stage-1 LS estimate");
  require(static_cast<long>(Q) * N * I >= LL, "Q*N*I >= L1*L2 is required");
  require(static_cast<long>(Q) * M * I >= LL, "Q*M*I >= L1*L2 is required");
  require(static_cast<long>(Q) * M * N >= LL, "Q*M*N >= L1*L2 is required");
  require(static_cast<long>(M) * Tp >= LL, "M*Tp >= L1*L2 is required for fading initialization");
  require(M * K >= Q, "M*K >= Q is required for symbol estimation");
  require(static_cast<long>(M) * Td >= LL, "M*Td >= L1*L2 is required for fading refinement");
}

SystemConfig parse_config(std::string_view text) {
  SystemConfig c;
  bool panel_given = false;
  std::istringstream in{std::string(text)};
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key == "M") c.M = parse_number<int>(key, value);
    else if (key == "Q") c.Q = parse_number<int>(key, value);
    else if (key == "N") c.N = parse_number<int>(key, value);
    else if (key == "N1") { c.N1 = parse_number<int>(key, value); panel_given = true; }
    else if (key == "N2") { c.N2 = parse_number<int>(key, value); panel_given = true; }
    else if (key == "L1") c.L1 = parse_number<int>(key, value);
    else if (key == "L2") c.L2 = parse_number<int>(key, value);
    else if (key == "T0") c.T0 = parse_number<int>(key, value);
    else if (key == "Tp") c.Tp = parse_number<int>(key, value);
    else if (key == "Td") c.Td = parse_number<int>(key, value);
    else if (key == "I") c.I = parse_number<int>(key, value);
    else if (key == "K") c.K = parse_number<int>(key, value);
    else if (key == "delta") c.delta = parse_number<double>(key, value);
    else if (key == "lambda") c.lambda = parse_number<double>(key, value);
    else if (key == "snr_db") c.snr_db = parse_number<double>(key, value);
    else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, value);
    else throw ConfigError("config line " + std::to_string(lineno) + ": unknown key '" + std::string(key) + "'");
  }
  if (!panel_given) c.use_default_panel();
  c.validate();
  return c;
}

SystemConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string to_config_text(const SystemConfig& c) {
  std::ostringstream out;
  out << "M = " << c.M << "\nQ = " << c.Q << "\nN = " << c.N << "\nN1 = " << c.N1
      << "\nN2 = " << c.N2 << "\nL1 = " << c.L1 << "\nL2 = " << c.L2 << "\nT0 = " << c.T0
      << "\nTp = " << c.Tp << "\nTd = " << c.Td << "\nI = " << c.I << "\nK = " << c.K
      << "\ndelta = " << c.delta << "\nlambda = " << c.lambda << "\nsnr_db = "
      << (c.noiseless() ? std::string("inf") : std::to_string(c.snr_db)) << "\nseed = " << c.seed
      << '\n';
  return out.str();
}

}  // namespace irs
