#include "qsky/measurement.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

namespace qsky {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kAngleTol = 1e-6;

double wrap_angle(double theta) {
  double t = std::fmod(theta, kTwoPi);
  if (t < 0) t += kTwoPi;
  if (t >= kTwoPi) t = 0.0;
  return t;
}

double angular_distance(double x, double y) {
  const double d = std::fabs(wrap_angle(x - y));
  return std::min(d, kTwoPi - d);
}

struct LabelToken {
  BasisLabel label;
  const char* text;
};

constexpr LabelToken kLabelTokens[] = {
    {BasisLabel::Zero, "|0>"},  {BasisLabel::One, "|1>"},    {BasisLabel::Plus, "|+>"},
    {BasisLabel::PlusI, "|+i>"}, {BasisLabel::Minus, "|->"}, {BasisLabel::MinusI, "|-i>"},
};

std::string format_analyzer(const Analyzer& an) {
  if (an.kind == Analyzer::Kind::Label) {
    for (const auto& t : kLabelTokens)
      if (t.label == an.label) return t.text;
  }
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(6) << an.theta;
  return ss.str();
}

Analyzer parse_analyzer(const std::string& token) {
  for (const auto& t : kLabelTokens)
    if (token == t.text) return Analyzer::basis(t.label);
  std::size_t used = 0;
  double theta = 0.0;
  try {
    theta = std::stod(token, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != token.size() || token.empty()) throw Error(Errc::BadFormat, "cannot parse analyser '" + token + "'");
  return Analyzer::phase(theta);
}

}  // namespace

Analyzer Analyzer::phase(double theta) { return {Kind::Phase, BasisLabel::Zero, wrap_angle(theta)}; }

bool operator==(const Analyzer& x, const Analyzer& y) {
  if (x.kind != y.kind) return false;
  if (x.kind == Analyzer::Kind::Label) return x.label == y.label;
  return angular_distance(x.theta, y.theta) < kAngleTol;
}

Vector2c analyzer_state(const Analyzer& an, Side side) {
  const double s = 1.0 / std::numbers::sqrt2;
  if (an.kind == Analyzer::Kind::Phase) {
    const double sign = side == Side::A ? 1.0 : -1.0;
    return Vector2c(s, std::polar(s, sign * an.theta));
  }
  switch (an.label) {
    case BasisLabel::Zero: return Vector2c(1.0, 0.0);
    case BasisLabel::One: return Vector2c(0.0, 1.0);
    case BasisLabel::Plus: return Vector2c(s, s);
    case BasisLabel::Minus: return Vector2c(s, -s);
    case BasisLabel::PlusI: return Vector2c(s, cplx(0, s));
    case BasisLabel::MinusI: return Vector2c(s, cplx(0, -s));
  }
  return Vector2c::Zero();
}

Matrix4c projector(const ProjectionSetting& setting) {
  const Vector4c v = tensor_product(analyzer_state(setting.a, Side::A), analyzer_state(setting.b, Side::B));
  return v * v.adjoint();
}

void CountTable::set(const ProjectionSetting& setting, std::int64_t counts) {
  for (auto& e : entries)
    if (e.setting == setting) {
      e.counts = counts;
      return;
    }
  entries.push_back({setting, counts});
}

const CountEntry* CountTable::find(const ProjectionSetting& setting) const {
  for (const auto& e : entries)
    if (e.setting == setting) return &e;
  return nullptr;
}

void write_count_table(std::ostream& os, const CountTable& table) {
  os << "# qsky count table\n";
  os << "# n0 " << std::setprecision(17) << table.n0 << "\n";
  os << "# accidental " << std::setprecision(17) << table.accidental << "\n";
  os << "# seed " << table.seed << "\n";
  os << "# theta_a theta_b counts\n";
  for (const auto& e : table.entries)
    os << format_analyzer(e.setting.a) << ' ' << format_analyzer(e.setting.b) << ' ' << e.counts << '\n';
}

CountTable read_count_table(std::istream& is) {
  CountTable table;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ss(line);
    if (line.front() == '#') {
      std::string hash, key;
      ss >> hash >> key;
      if (key == "n0") ss >> table.n0;
      else if (key == "accidental") ss >> table.accidental;
      else if (key == "seed") ss >> table.seed;
      continue;
    }
    std::string ta, tb;
    long long counts = -1;
    if (!(ss >> ta >> tb >> counts) || counts < 0)
      throw Error(Errc::BadFormat, "line " + std::to_string(line_no) + ": expected 'theta_a theta_b counts'");
    table.set({parse_analyzer(ta), parse_analyzer(tb)}, counts);
  }
  return table;
}

double joint_probability(const DensityMatrix& rho, const ProjectionSetting& setting) {
  const Vector4c v = tensor_product(analyzer_state(setting.a, Side::A), analyzer_state(setting.b, Side::B));
  const double p = (v.adjoint() * rho * v)(0, 0).real();
  return std::clamp(p, 0.0, 1.0);
}

CoincidenceCurve expected_curve(const DensityMatrix& rho, const std::vector<double>& theta_a,
                                const std::vector<double>& theta_b) {
  CoincidenceCurve curve{theta_a, theta_b, Eigen::MatrixXd(theta_a.size(), theta_b.size())};
  for (std::size_t i = 0; i < theta_a.size(); ++i)
    for (std::size_t j = 0; j < theta_b.size(); ++j)
      curve.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          joint_probability(rho, {Analyzer::phase(theta_a[i]), Analyzer::phase(theta_b[j])});
  return curve;
}

std::vector<double> uniform_angles(int n) {
  std::vector<double> out(static_cast<std::size_t>(std::max(n, 0)));
  for (int k = 0; k < n; ++k) out[static_cast<std::size_t>(k)] = kTwoPi * k / n;
  return out;
}

CountTable coincidence_curve(const DensityMatrix& rho, const std::vector<double>& theta_a,
                             const std::vector<double>& theta_b, double n0, std::uint64_t seed,
                             double accidental, Sampling mode) {
  if (!(n0 > 0.0)) throw Error(Errc::BadConfig, "n0 must be positive");
  CountTable table;
  table.n0 = n0;
  table.accidental = accidental;
  table.seed = seed;
  Rng rng(seed);
  for (double ta : theta_a)
    for (double tb : theta_b) {
      const ProjectionSetting s{Analyzer::phase(ta), Analyzer::phase(tb)};
      table.entries.push_back({s, sample_count(rng, n0 * joint_probability(rho, s) + accidental, mode)});
    }
  return table;
}

CoincidenceCurve to_curve(const CountTable& table) {
  CoincidenceCurve curve;
  std::vector<std::vector<std::pair<double, double>>> traces;
  for (const auto& e : table.entries) {
    if (e.setting.a.kind != Analyzer::Kind::Phase || e.setting.b.kind != Analyzer::Kind::Phase)
      throw Error(Errc::BadFormat, "coincidence curves need phase analysers on both sides");
    std::size_t row = 0;
    while (row < curve.theta_a.size() && angular_distance(curve.theta_a[row], e.setting.a.theta) >= kAngleTol) ++row;
    if (row == curve.theta_a.size()) {
      curve.theta_a.push_back(e.setting.a.theta);
      traces.emplace_back();
    }
    traces[row].emplace_back(e.setting.b.theta, static_cast<double>(e.counts));
  }
  std::size_t width = 0;
  for (auto& t : traces) {
    std::sort(t.begin(), t.end());
    width = std::max(width, t.size());
  }
  for (const auto& t : traces)
    if (t.size() != width) throw Error(Errc::BadFormat, "traces have different numbers of theta_b samples");
  curve.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(traces.size()), static_cast<Eigen::Index>(width));
  if (!traces.empty())
    for (const auto& [tb, _] : traces.front()) curve.theta_b.push_back(tb);
  for (std::size_t i = 0; i < traces.size(); ++i)
    for (std::size_t j = 0; j < width; ++j)
      curve.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = traces[i][j].second;
  return curve;
}

double visibility(const CoincidenceCurve& curve) {
  if (curve.values.rows() == 0 || curve.values.cols() < 2)
    throw Error(Errc::Degenerate, "visibility needs at least two samples per trace");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < curve.values.rows(); ++i) {
    const double hi = curve.values.row(i).maxCoeff();
    const double lo = curve.values.row(i).minCoeff();
    if (hi + lo <= 0.0) throw Error(Errc::Degenerate, "trace has J_max + J_min = 0");
    sum += (hi - lo) / (hi + lo);
  }
  return sum / static_cast<double>(curve.values.rows());
}

double visibility(const CountTable& table) { return visibility(to_curve(table)); }

double correlation(const DensityMatrix& rho, double ta, double tb) {
  const double pi = std::numbers::pi;
  auto j = [&](double x, double y) { return joint_probability(rho, {Analyzer::phase(x), Analyzer::phase(y)}); };
  const double same = j(ta, tb) + j(ta + pi, tb + pi);
  const double diff = j(ta + pi, tb) + j(ta, tb + pi);
  const double total = same + diff;
  return total > 0.0 ? (same - diff) / total : 0.0;
}

double chsh_s(const DensityMatrix& rho, const ChshAngles& g) {
  return correlation(rho, g.a, g.b) - correlation(rho, g.a, g.b_prime) + correlation(rho, g.a_prime, g.b) +
         correlation(rho, g.a_prime, g.b_prime);
}

std::vector<ProjectionSetting> chsh_settings(const ChshAngles& g) {
  const double pi = std::numbers::pi;
  std::vector<ProjectionSetting> out;
  for (double ta : {g.a, g.a_prime})
    for (double tb : {g.b, g.b_prime})
      for (double da : {0.0, pi})
        for (double db : {0.0, pi}) out.push_back({Analyzer::phase(ta + da), Analyzer::phase(tb + db)});
  return out;
}

CountTable sample_chsh(const DensityMatrix& rho, double n0, std::uint64_t seed, const ChshAngles& angles,
                       double accidental, Sampling mode) {
  if (!(n0 > 0.0)) throw Error(Errc::BadConfig, "n0 must be positive");
  CountTable table;
  table.n0 = n0;
  table.accidental = accidental;
  table.seed = seed;
  Rng rng(seed);
  for (const auto& s : chsh_settings(angles))
    table.entries.push_back({s, sample_count(rng, n0 * joint_probability(rho, s) + accidental, mode)});
  return table;
}

ChshEstimate chsh_from_counts(const CountTable& table, const ChshAngles& g) {
  const double pi = std::numbers::pi;
  std::string missing;
  auto counts = [&](double ta, double tb) -> double {
    const ProjectionSetting s{Analyzer::phase(ta), Analyzer::phase(tb)};
    if (const CountEntry* e = table.find(s)) return static_cast<double>(e->counts);
    std::ostringstream ss;
    ss << std::fixed << std::setprecision(6) << " (" << s.a.theta << ", " << s.b.theta << ")";
    missing += ss.str();
    return 0.0;
  };
  struct Term {
    double value, variance;
  };
  auto term = [&](double ta, double tb) -> Term {
    const double same = counts(ta, tb) + counts(ta + pi, tb + pi);
    const double diff = counts(ta + pi, tb) + counts(ta, tb + pi);
    const double total = same + diff;
    if (total <= 0.0) return {0.0, 0.0};
    return {(same - diff) / total, 4.0 * same * diff / (total * total * total)};
  };
  const Term e1 = term(g.a, g.b), e2 = term(g.a, g.b_prime), e3 = term(g.a_prime, g.b), e4 = term(g.a_prime, g.b_prime);
  if (!missing.empty()) throw Error(Errc::MissingSetting, "absent settings:" + missing);
  return {e1.value - e2.value + e3.value + e4.value,
          std::sqrt(e1.variance + e2.variance + e3.variance + e4.variance)};
}

double coherence_length(double lambda_nm, double delta_lambda_nm) {
  if (!(lambda_nm > 0.0 && delta_lambda_nm > 0.0))
    throw Error(Errc::BadConfig, "wavelength and bandwidth must be positive");
  return lambda_nm * lambda_nm / delta_lambda_nm * 1e-3;
}

}  // namespace qsky
