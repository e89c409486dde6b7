#include "wlab/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace wlab {

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

namespace {

std::string coords_header(const WeightedManifold& M) { return M.dim() == 1 ? "x" : "x,y"; }

void coords(std::ostringstream& os, const WeightedManifold& M, std::size_t i) {
  for (int a = 0; a < M.dim(); ++a) os << ',' << format_number(M.coordinate(i, a));
}

}  // namespace

std::string curvature_csv(const WeightedManifold& M, const CurvatureField& field) {
  std::ostringstream os;
  os << "# wlab curvature v1 m=" << format_number(field.m)
     << " admissible_K=" << format_number(field.admissible_K) << "\n";
  os << "node_index," << coords_header(M) << ",ric_mn_value\n";
  for (std::size_t i = 0; i < M.size(); ++i) {
    os << i;
    coords(os, M, i);
    os << ',' << format_number(field.values[i]) << '\n';
  }
  return os.str();
}

std::string field_csv(const WeightedManifold& M, const Field& values, const std::string& column) {
  std::ostringstream os;
  os << "# wlab field v1\n";
  os << "node," << coords_header(M) << ',' << column << '\n';
  for (std::size_t i = 0; i < M.size(); ++i) {
    os << i;
    coords(os, M, i);
    os << ',' << format_number(values[i]) << '\n';
  }
  return os.str();
}

std::string snapshots_csv(const std::vector<HeatState>& snapshots) {
  std::ostringstream os;
  os << "# wlab snapshots v1\n";
  os << "t,node,u\n";
  for (const auto& s : snapshots)
    for (std::size_t i = 0; i < s.u.size(); ++i)
      os << format_number(s.t) << ',' << i << ',' << format_number(s.u[i]) << '\n';
  return os.str();
}

std::string manifest_csv(const std::vector<ManifestEntry>& manifest) {
  std::ostringstream os;
  os << "# wlab manifest v1\n";
  os << "t,dt,error_estimate,cg_iterations,accepted\n";
  for (const auto& e : manifest)
    os << format_number(e.t) << ',' << format_number(e.dt) << ',' << format_number(e.error_estimate)
       << ',' << e.iterations << ',' << (e.accepted ? 1 : 0) << '\n';
  return os.str();
}

HarnackRow to_row(const HarnackReport& r) {
  return {r.inequality, r.t, r.m, r.K, r.min_defect, r.argmin, r.ok, r.resolved_mass};
}

std::string harnack_csv(const std::vector<HarnackRow>& rows) {
  std::ostringstream os;
  os << "# wlab harnack v1\n";
  os << "inequality,t,m,K,min_defect,argmin_node,ok,resolved_mass\n";
  for (const auto& r : rows)
    os << r.inequality << ',' << format_number(r.t) << ',' << format_number(r.m) << ','
       << format_number(r.K) << ',' << format_number(r.min_defect) << ',' << r.argmin << ','
       << (r.ok ? 1 : 0) << ',' << format_number(r.resolved_mass) << '\n';
  return os.str();
}

std::string entropy_csv(const EntropySeries& series, bool with_margin) {
  std::ostringstream os;
  os << "# wlab entropy v1 m=" << format_number(series.m) << " K=" << format_number(series.K)
     << "\n";
  os << "t,H,dH_dt,d2H_dt2,Phi,H_mK,W_mK,dW_dt_numeric,T1,T2,T3,T4,dW_dt_formula,residual,"
        "monotonicity_bound";
  if (with_margin) os << ",flow_margin";
  os << '\n';
  for (const auto& r : series.rows) {
    const double v[] = {r.t,        r.H,        r.dH_dt,    r.d2H_dt2,  r.Phi,
                        r.H_mK,     r.W_mK,     r.dW_dt_numeric, r.terms.T1, r.terms.T2,
                        r.terms.T3, r.terms.T4, r.terms.formula, r.residual, r.bound};
    for (std::size_t k = 0; k < std::size(v); ++k) os << (k ? "," : "") << format_number(v[k]);
    if (with_margin) os << ',' << format_number(r.margin);
    os << '\n';
  }
  return os.str();
}

std::string dissipation_csv(const std::vector<DissipationRow>& rows) {
  std::ostringstream os;
  os << "# wlab dissipation v1\n";
  os << "t,H,dH_dt,d2H_dt2,dH_numeric,d2H_numeric,residual1,residual2\n";
  for (const auto& r : rows)
    os << format_number(r.t) << ',' << format_number(r.H) << ',' << format_number(r.dH_dt) << ','
       << format_number(r.d2H_dt2) << ',' << format_number(r.dH_numeric) << ','
       << format_number(r.d2H_numeric) << ',' << format_number(r.residual1) << ','
       << format_number(r.residual2) << '\n';
  return os.str();
}

}  // namespace wlab
