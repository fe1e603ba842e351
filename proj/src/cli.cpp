#include "eigensens/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "eigensens/error.hpp"
#include "eigensens/fit.hpp"
#include "eigensens/influence.hpp"
#include "eigensens/parallel.hpp"
#include "eigensens/subspace_diag.hpp"
#include "eigensens/switching.hpp"

namespace eigensens::cli {

namespace {

using Json = nlohmann::ordered_json;

std::string format_number(double v, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", precision, v);
  return buf;
}

// Rounded to `precision` significant digits so the JSON text is stable under
// parse/re-serialize.
Json number(double v, int precision) {
  if (!std::isfinite(v)) return nullptr;
  return std::strtod(format_number(v, precision).c_str(), nullptr);
}

Json number(const std::optional<double>& v, int precision) {
  return v ? number(*v, precision) : Json(nullptr);
}

Json vector_json(const Eigen::VectorXd& v, int precision) {
  Json arr = Json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) arr.push_back(number(v(k), precision));
  return arr;
}

Json pair_json(RankPair pair) { return Json::array({pair.first, pair.second}); }

std::string mode_name(Mode mode) {
  switch (mode) {
    case Mode::approx: return "approx";
    case Mode::exact: return "exact";
    case Mode::hybrid: return "hybrid";
  }
  return "approx";
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  void add(std::vector<std::string> row) { rows_.push_back(std::move(row)); }

  void write(std::ostream& out) const {
    write_row(out, header_);
    for (const auto& r : rows_) write_row(out, r);
  }

 private:
  static void write_row(std::ostream& out, const std::vector<std::string>& row) {
    for (std::size_t k = 0; k < row.size(); ++k) out << (k ? "," : "") << csv_escape(row[k]);
    out << '\n';
  }

  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

std::string cell(const std::optional<double>& v, int precision) {
  return v && std::isfinite(*v) ? format_number(*v, precision) : std::string();
}

std::string join(const std::vector<std::string>& parts, const char* sep) {
  std::string out;
  for (std::size_t k = 0; k < parts.size(); ++k) out += (k ? sep : "") + parts[k];
  return out;
}

std::filesystem::path companion_path(const std::filesystem::path& primary, const std::string& table) {
  auto name = primary.stem().string() + "_" + table + primary.extension().string();
  return primary.parent_path() / name;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream file(path, std::ios::binary);
  if (!file) throw DataError("cannot write '" + path.string() + "'");
  file << text;
  if (!file) throw DataError("failed writing '" + path.string() + "'");
}

// Primary document to --out or stdout; companion CSV tables only when --out is a path.
void emit(const RunConfig& config, std::ostream& out, const std::string& primary,
          const std::vector<std::pair<std::string, std::string>>& companions = {}) {
  if (!config.out) {
    out << primary;
    return;
  }
  write_file(*config.out, primary);
  for (const auto& [table, text] : companions) write_file(companion_path(*config.out, table), text);
}

std::string dump(const Json& doc) { return doc.dump(2) + "\n"; }

std::string table_text(const CsvTable& t) {
  std::ostringstream s;
  t.write(s);
  return s.str();
}

Fit load_fit(const RunConfig& config, std::ostream& err) {
  CsvOptions csv;
  csv.header = config.header;
  csv.label_column = config.label_column;
  DataMatrix data = load_csv(config.input, csv);
  if (config.retained > data.cols()) {
    throw ConfigError("--L " + std::to_string(config.retained) + " exceeds the " +
                      std::to_string(data.cols()) + " variables in the data");
  }
  if (config.pairs) validate_pairs(*config.pairs, data.cols());
  Fit fit(std::move(data), config.spec);
  for (const auto& g : fit.eigen().gap_warnings) {
    err << "warning: eigenvalues " << g.first << " and " << g.second
        << " are tied within tolerance; diagnostics touching them are unreliable\n";
  }
  return fit;
}

Json header_json(const char* command, const RunConfig& config, const Fit& fit) {
  Json doc;
  doc["command"] = command;
  doc["input"] = config.input.filename().string();
  doc["estimator"] = to_string(config.spec.kind);
  doc["divisor"] = to_string(config.spec.divisor);
  doc["n"] = fit.n();
  doc["p"] = fit.p();
  return doc;
}

}  // namespace

void validate(const RunConfig& config) {
  if (config.retained < 1) throw ConfigError("--L must be >= 1");
  if (!(config.delta > 0.0)) throw ConfigError("--delta must be > 0");
  if (config.jobs < 1) throw ConfigError("--jobs must be >= 1");
  if (config.precision < 1 || config.precision > 17) throw ConfigError("--precision must be in 1..17");
  if (config.cascade_rounds < 1) throw ConfigError("--cascade must be >= 1");
}

std::vector<RankPair> parse_pairs(const std::string& text) {
  std::vector<RankPair> pairs;
  std::stringstream items(text);
  std::string item;
  while (std::getline(items, item, ',')) {
    const auto colon = item.find(':');
    std::size_t first = 0;
    std::size_t second = 0;
    try {
      if (colon == std::string::npos) throw std::invalid_argument("missing ':'");
      std::size_t used = 0;
      first = std::stoul(item.substr(0, colon), &used);
      if (used != colon) throw std::invalid_argument("trailing text");
      second = std::stoul(item.substr(colon + 1), &used);
      if (used != item.size() - colon - 1) throw std::invalid_argument("trailing text");
    } catch (const std::exception&) {
      throw ConfigError("--pairs: cannot parse '" + item + "', expected j:k");
    }
    if (first < 1 || second != first + 1) {
      throw ConfigError("--pairs: '" + item + "' is not an adjacent pair j:j+1");
    }
    pairs.push_back({first, second});
  }
  if (pairs.empty()) throw ConfigError("--pairs: empty list");
  return pairs;
}

void cmd_analyze(const RunConfig& config, std::ostream& out, std::ostream& err) {
  validate(config);
  const Fit fit = load_fit(config, err);
  const int prec = config.precision;
  const Eigen::VectorXd& lambda = fit.eigen().values;
  const double total = lambda.sum();
  const std::size_t retained = config.retained;
  const Subspace s = subspace(fit.eigen(), retained);
  if (s.boundary_degenerate) {
    err << "warning: retained subspace boundary (" << retained << ", " << retained + 1
        << ") is degenerate\n";
  }
  Eigen::MatrixXd scores = fit.working_data() * s.basis;

  Json doc = header_json("analyze", config, fit);
  doc["L"] = retained;
  doc["variables"] = fit.data().col_labels();
  Json eig = Json::array();
  CsvTable eig_table({"component", "eigenvalue", "proportion", "cumulative", "difference"});
  double cumulative = 0.0;
  for (Eigen::Index j = 0; j < lambda.size(); ++j) {
    cumulative += lambda(j);
    const double proportion = lambda(j) / total;
    const std::optional<double> diff =
        j + 1 < lambda.size() ? std::optional<double>(lambda(j) - lambda(j + 1)) : std::nullopt;
    eig.push_back({{"component", j + 1},
                   {"eigenvalue", number(lambda(j), prec)},
                   {"proportion", number(proportion, prec)},
                   {"cumulative", number(cumulative / total, prec)},
                   {"difference", number(diff, prec)}});
    eig_table.add({std::to_string(j + 1), format_number(lambda(j), prec), format_number(proportion, prec),
                   format_number(cumulative / total, prec), cell(diff, prec)});
  }
  doc["eigenvalues"] = eig;
  Json gaps = Json::array();
  for (const auto& g : fit.eigen().gap_warnings) gaps.push_back(pair_json(g));
  doc["gap_warnings"] = gaps;

  std::vector<std::string> load_header{"variable"};
  for (std::size_t j = 0; j < fit.p(); ++j) load_header.push_back("PC" + std::to_string(j + 1));
  CsvTable load_table(load_header);
  Json loadings = Json::array();
  for (std::size_t v = 0; v < fit.p(); ++v) {
    const auto row = fit.eigen().vectors.row(static_cast<Eigen::Index>(v)).transpose();
    loadings.push_back({{"variable", fit.data().col_labels()[v]}, {"values", vector_json(row, prec)}});
    std::vector<std::string> cells{fit.data().col_labels()[v]};
    for (Eigen::Index j = 0; j < row.size(); ++j) cells.push_back(format_number(row(j), prec));
    load_table.add(cells);
  }
  doc["loadings"] = loadings;

  std::vector<std::string> score_header{"obs", "label"};
  for (std::size_t j = 0; j < retained; ++j) score_header.push_back("PC" + std::to_string(j + 1));
  CsvTable score_table(score_header);
  Json score_rows = Json::array();
  for (std::size_t i = 0; i < fit.n(); ++i) {
    const Eigen::VectorXd row = scores.row(static_cast<Eigen::Index>(i)).transpose();
    score_rows.push_back({{"obs", i + 1}, {"label", fit.data().row_labels()[i]}, {"scores", vector_json(row, prec)}});
    std::vector<std::string> cells{std::to_string(i + 1), fit.data().row_labels()[i]};
    for (Eigen::Index j = 0; j < row.size(); ++j) cells.push_back(format_number(row(j), prec));
    score_table.add(cells);
  }
  doc["scores"] = score_rows;

  if (config.format == OutputFormat::json) {
    emit(config, out, dump(doc));
  } else {
    emit(config, out, table_text(eig_table),
         {{"loadings", table_text(load_table)}, {"scores", table_text(score_table)}});
  }
}

void cmd_influence(const RunConfig& config, std::ostream& out, std::ostream& err) {
  validate(config);
  reset_decomposition_count();
  const Fit fit = load_fit(config, err);
  const int prec = config.precision;
  const std::size_t retained = config.retained;
  const std::size_t p = fit.p();

  std::set<std::size_t> flagged;
  std::set<std::size_t> switching;
  if (config.mode == Mode::hybrid && (config.pairs || retained < p)) {
    // Only the retained boundary moves the subspace unless pairs are given.
    const auto scope = config.pairs.value_or(std::vector<RankPair>{RankPair::at(retained)});
    switching = switching_rows(detect_switching(fit, scope, config.jobs));
    flagged = flagged_rows(detect_near_switch(fit, config.delta, scope, config.jobs));
    flagged.insert(switching.begin(), switching.end());
  } else if (config.mode == Mode::exact) {
    for (std::size_t row = 0; row < fit.n(); ++row) flagged.insert(row);
  }

  std::vector<InfluenceRecord> records(fit.n());
  std::vector<EigenInfluence> eigen_rows(fit.n());
  parallel_for(fit.n(), config.jobs, [&](std::size_t row) {
    InfluenceRecord rec = empirical_record(fit, retained, row);
    if (flagged.contains(row)) {
      const EigenSystem loo = fit.loo_eigen(row);
      add_sample_measures(rec, fit, loo);
      rec.replaced = config.mode == Mode::hybrid;
      eigen_rows[row] = eigen_influence(fit, row, loo);
    } else {
      eigen_rows[row] = eigen_influence(fit, row, false);
    }
    rec.switching = switching.contains(row);
    rec.near_switch = !rec.switching && flagged.contains(row) && config.mode == Mode::hybrid;
    records[row] = std::move(rec);
  });

  Json doc = header_json("influence", config, fit);
  doc["mode"] = mode_name(config.mode);
  doc["L"] = retained;
  if (config.mode == Mode::hybrid) doc["delta"] = config.delta;
  Json flagged_json = Json::array();
  for (const auto row : flagged) flagged_json.push_back(row + 1);
  if (config.mode == Mode::hybrid) doc["flagged"] = flagged_json;
  if (config.mode == Mode::approx) {
    doc["sample_measures"] = "not computed in approx mode (use --mode exact or hybrid)";
  }

  std::vector<std::string> header{"obs", "label", "sif_b", "eif_b", "sci", "scia", "hybrid_b", "hybrid_c",
                                  "replaced", "switching", "near_switch"};
  for (const char* kind : {"sif", "eif", "hif"}) {
    for (std::size_t j = 1; j <= p; ++j) header.push_back(std::string(kind) + "_l" + std::to_string(j));
  }
  header.push_back("notes");
  CsvTable table(header);
  CsvTable long_table({"obs", "label", "series", "value"});

  const auto degenerate_null = [&](const std::optional<Eigen::VectorXd>& v, std::size_t j) {
    std::optional<double> out;
    if (v && !fit.eigen().degenerate_at(j)) out = (*v)(static_cast<Eigen::Index>(j));
    return out;
  };

  Json rows = Json::array();
  for (std::size_t row = 0; row < fit.n(); ++row) {
    const auto& rec = records[row];
    const auto& ei = eigen_rows[row];
    const std::string& label = fit.data().row_labels()[row];
    std::optional<double> hybrid_b;
    std::optional<double> hybrid_c;
    if (config.mode == Mode::hybrid) {
      hybrid_b = rec.replaced ? rec.sif_b : rec.eif_b;
      hybrid_c = rec.replaced ? rec.sci : rec.scia;
    }
    Json eig;
    Json sif = Json::array();
    Json eif = Json::array();
    Json hif = Json::array();
    for (std::size_t j = 0; j < p; ++j) {
      sif.push_back(number(degenerate_null(ei.sif, j), prec));
      eif.push_back(number(degenerate_null(ei.eif, j), prec));
      hif.push_back(number(ei.hif(static_cast<Eigen::Index>(j)), prec));
    }
    eig["sif"] = ei.sif ? sif : Json(nullptr);
    eig["eif"] = ei.eif ? eif : Json(nullptr);
    eig["hif"] = hif;

    rows.push_back({{"obs", row + 1},
                    {"label", label},
                    {"sif_b", number(rec.sif_b, prec)},
                    {"eif_b", number(rec.eif_b, prec)},
                    {"sci", number(rec.sci, prec)},
                    {"scia", number(rec.scia, prec)},
                    {"hybrid_b", number(hybrid_b, prec)},
                    {"hybrid_c", number(hybrid_c, prec)},
                    {"replaced", rec.replaced},
                    {"switching", rec.switching},
                    {"near_switch", rec.near_switch},
                    {"eigenvalue", eig},
                    {"notes", rec.notes}});

    std::vector<std::string> cells{std::to_string(row + 1), label, cell(rec.sif_b, prec), cell(rec.eif_b, prec),
                                   cell(rec.sci, prec), cell(rec.scia, prec), cell(hybrid_b, prec),
                                   cell(hybrid_c, prec), rec.replaced ? "1" : "0", rec.switching ? "1" : "0",
                                   rec.near_switch ? "1" : "0"};
    for (std::size_t j = 0; j < p; ++j) cells.push_back(cell(degenerate_null(ei.sif, j), prec));
    for (std::size_t j = 0; j < p; ++j) cells.push_back(cell(degenerate_null(ei.eif, j), prec));
    for (std::size_t j = 0; j < p; ++j) cells.push_back(format_number(ei.hif(static_cast<Eigen::Index>(j)), prec));
    cells.push_back(join(rec.notes, "; "));
    table.add(cells);

    const std::vector<std::pair<const char*, std::optional<double>>> series{
        {"sif_b", rec.sif_b}, {"eif_b", rec.eif_b}, {"sci", rec.sci},
        {"scia", rec.scia},   {"hybrid_b", hybrid_b}, {"hybrid_c", hybrid_c}};
    for (const auto& [name, value] : series) {
      if (value) long_table.add({std::to_string(row + 1), label, name, format_number(*value, prec)});
    }
  }
  doc["records"] = rows;
  doc["decompositions"] = decomposition_count();

  if (config.format == OutputFormat::json) {
    emit(config, out, dump(doc));
  } else {
    emit(config, out, table_text(table), {{"long", table_text(long_table)}});
  }
}

namespace {

Json events_json(const std::vector<SwitchEvent>& events, int prec) {
  Json arr = Json::array();
  for (const auto& e : events) {
    Json j = {{"obs", e.obs},
              {"label", e.label},
              {"pair", pair_json(e.pair)},
              {"approx_first", number(e.approx_first, prec)},
              {"approx_second", number(e.approx_second, prec)},
              {"kind", to_string(e.kind)}};
    if (e.verified_exact) j["verified_exact"] = *e.verified_exact;
    arr.push_back(j);
  }
  return arr;
}

Json obs_list(const std::vector<SwitchEvent>& events, SwitchKind kind) {
  std::set<std::size_t> obs;
  for (const auto& e : events) {
    if (e.kind == kind) obs.insert(e.obs);
  }
  return Json(std::vector<std::size_t>(obs.begin(), obs.end()));
}

// {"2:3": [obs, ...], ...} for pairs with at least one event of `kind`.
Json obs_by_pair(const std::vector<SwitchEvent>& events, SwitchKind kind) {
  std::map<RankPair, std::vector<SwitchEvent>> grouped;
  for (const auto& e : events) {
    if (e.kind == kind) grouped[e.pair].push_back(e);
  }
  Json out = Json::object();
  for (const auto& [pair, list] : grouped) {
    out[std::to_string(pair.first) + ":" + std::to_string(pair.second)] = obs_list(list, kind);
  }
  return out;
}

}  // namespace

void cmd_switching(const RunConfig& config, std::ostream& out, std::ostream& err) {
  validate(config);
  reset_decomposition_count();
  const Fit fit = load_fit(config, err);
  if (config.retained >= fit.p()) {
    throw ConfigError("--L must be below the number of variables for a retention recommendation");
  }
  const int prec = config.precision;

  SwitchOptions options;
  options.candidate = config.retained;
  options.delta = config.delta;
  options.pairs = config.pairs;
  options.exact = config.mode == Mode::exact;
  options.hybrid = config.mode == Mode::hybrid;
  options.jobs = config.jobs;
  const SwitchReport report = switching_report(fit, options);

  Json doc = header_json("switching", config, fit);
  doc["mode"] = mode_name(config.mode);
  doc["candidate_L"] = config.retained;
  doc["delta"] = report.delta;
  Json pairs = Json::array();
  for (const auto& pr : config.pairs.value_or(all_pairs(fit.p()))) pairs.push_back(pair_json(pr));
  doc["pairs"] = pairs;
  doc["events"] = events_json(report.events, prec);
  doc["switching_observations"] = obs_by_pair(report.events, SwitchKind::switching);
  doc["near_switch_observations"] = obs_by_pair(report.events, SwitchKind::near_switch);
  doc["recommended_L"] = report.recommendation.retained ? Json(*report.recommendation.retained) : Json(nullptr);
  doc["rationale"] = report.recommendation.rationale;

  CsvTable approx_table({"obs", "label", "rank", "approx", "exact"});
  Json approximations = Json::array();
  for (const auto& a : report.approximations) {
    const std::string& label = fit.data().row_labels()[a.obs - 1];
    Json j = {{"obs", a.obs}, {"label", label}, {"approx", vector_json(a.approx_values, prec)}};
    if (a.exact_values) j["exact"] = vector_json(*a.exact_values, prec);
    approximations.push_back(j);
    for (Eigen::Index k = 0; k < a.approx_values.size(); ++k) {
      approx_table.add({std::to_string(a.obs), label, std::to_string(k + 1), format_number(a.approx_values(k), prec),
                        a.exact_values ? format_number((*a.exact_values)(k), prec) : ""});
    }
  }
  doc["approximations"] = approximations;

  CsvTable hybrid_table({"obs", "label", "hybrid_b", "hybrid_c", "replaced", "switching", "near_switch", "notes"});
  if (options.hybrid) {
    Json series = Json::array();
    for (const auto& rec : report.hybrid_series) {
      const std::string& label = fit.data().row_labels()[rec.obs - 1];
      const auto hb = rec.replaced ? rec.sif_b : rec.eif_b;
      const auto hc = rec.replaced ? rec.sci : rec.scia;
      series.push_back({{"obs", rec.obs},
                        {"label", label},
                        {"hybrid_b", number(hb, prec)},
                        {"hybrid_c", number(hc, prec)},
                        {"replaced", rec.replaced},
                        {"switching", rec.switching},
                        {"near_switch", rec.near_switch},
                        {"notes", rec.notes}});
      hybrid_table.add({std::to_string(rec.obs), label, cell(hb, prec), cell(hc, prec), rec.replaced ? "1" : "0",
                        rec.switching ? "1" : "0", rec.near_switch ? "1" : "0", join(rec.notes, "; ")});
    }
    doc["hybrid_series"] = series;
  }

  CsvTable cascade_table({"round", "rows_used", "switching_observations"});
  if (config.cascade_rounds > 1) {
    SwitchOptions cascade_options = options;
    cascade_options.hybrid = false;
    Json rounds = Json::array();
    for (const auto& r : cascade_scan(fit.data(), fit.spec(), config.cascade_rounds, cascade_options)) {
      const Json switched = obs_list(r.report.events, SwitchKind::switching);
      rounds.push_back({{"round", r.round}, {"rows_used", r.rows_used}, {"switching_observations", switched}});
      std::vector<std::string> obs;
      for (const auto& o : switched) obs.push_back(std::to_string(o.get<std::size_t>()));
      cascade_table.add({std::to_string(r.round), std::to_string(r.rows_used), join(obs, " ")});
    }
    doc["cascade"] = rounds;
  }
  doc["decompositions"] = decomposition_count();

  if (config.format == OutputFormat::json) {
    emit(config, out, dump(doc));
    return;
  }
  CsvTable events({"obs", "label", "pair_first", "pair_second", "approx_first", "approx_second", "kind",
                   "verified_exact"});
  for (const auto& e : report.events) {
    events.add({std::to_string(e.obs), e.label, std::to_string(e.pair.first), std::to_string(e.pair.second),
                format_number(e.approx_first, prec), format_number(e.approx_second, prec), to_string(e.kind),
                e.verified_exact ? (*e.verified_exact ? "1" : "0") : ""});
  }
  CsvTable summary({"key", "value"});
  summary.add({"candidate_L", std::to_string(config.retained)});
  summary.add({"recommended_L",
               report.recommendation.retained ? std::to_string(*report.recommendation.retained) : ""});
  summary.add({"rationale", report.recommendation.rationale});
  summary.add({"delta", format_number(report.delta, 17)});
  std::vector<std::pair<std::string, std::string>> companions{{"summary", table_text(summary)},
                                                              {"approximations", table_text(approx_table)}};
  if (options.hybrid) companions.emplace_back("hybrid", table_text(hybrid_table));
  if (config.cascade_rounds > 1) companions.emplace_back("cascade", table_text(cascade_table));
  emit(config, out, table_text(events), companions);
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Leave-one-out eigenvalue influence and switching diagnostics"};
  app.require_subcommand(1);

  RunConfig config;
  std::string estimator = "cov";
  std::string divisor = "n-1";
  std::string mode = "approx";
  std::string format = "json";
  std::string pairs;
  std::string out_path;
  bool no_header = false;

  if (const char* env = std::getenv("EIGENSENS_JOBS")) {
    try {
      const long jobs = std::stol(env);
      if (jobs < 1) throw std::invalid_argument("jobs");
      config.jobs = static_cast<unsigned>(jobs);
    } catch (const std::exception&) {
      err << "error: EIGENSENS_JOBS must be a positive integer, got '" << env << "'\n";
      return 2;
    }
  }

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--input", config.input, "CSV file")->required();
    sub->add_option("--label-col", config.label_column, "Name of the row-label column");
    sub->add_flag("--no-header", no_header, "CSV has no header row");
    sub->add_option("--estimator", estimator, "cov or cor")
        ->check(CLI::IsMember({"cov", "cor"}))
        ->capture_default_str();
    sub->add_option("--divisor", divisor, "n or n-1")->check(CLI::IsMember({"n", "n-1"}))->capture_default_str();
    sub->add_option("--L", config.retained, "Retained components")->capture_default_str();
    sub->add_option("--format", format, "json or csv")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
    sub->add_option("--out", out_path, "Output path (default stdout)");
    sub->add_option("--precision", config.precision, "Significant digits")->capture_default_str();
    sub->add_option("--jobs", config.jobs, "Worker threads (default $EIGENSENS_JOBS or 1)");
  };
  const auto add_detection = [&](CLI::App* sub) {
    sub->add_option("--delta", config.delta, "Near-switch threshold")->capture_default_str();
    sub->add_option("--pairs", pairs, "Adjacent pairs to scan, e.g. 2:3,3:4");
    sub->add_option("--mode", mode, "approx, exact or hybrid")
        ->check(CLI::IsMember({"approx", "exact", "hybrid"}))
        ->capture_default_str();
  };

  auto* analyze = app.add_subcommand("analyze", "Eigenvalues, explained variance, loadings and PC scores");
  add_common(analyze);
  auto* influence = app.add_subcommand("influence", "Per-observation subspace and eigenvalue influence");
  add_common(influence);
  add_detection(influence);
  auto* switching = app.add_subcommand("switching", "Switching detection and retention recommendation");
  add_common(switching);
  add_detection(switching);
  switching->add_option("--cascade", config.cascade_rounds, "Deletion-cascade rounds (1 = off)")
      ->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    config.spec.kind = estimator == "cor" ? EstimatorKind::correlation : EstimatorKind::covariance;
    config.spec.divisor = divisor == "n" ? Divisor::n : Divisor::n_minus_1;
    config.mode = mode == "exact" ? Mode::exact : mode == "hybrid" ? Mode::hybrid : Mode::approx;
    config.format = format == "csv" ? OutputFormat::csv : OutputFormat::json;
    config.header = !no_header;
    if (!out_path.empty()) config.out = out_path;
    if (!pairs.empty()) config.pairs = parse_pairs(pairs);

    if (analyze->parsed()) cmd_analyze(config, out, err);
    if (influence->parsed()) cmd_influence(config, out, err);
    if (switching->parsed()) cmd_switching(config, out, err);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace eigensens::cli
