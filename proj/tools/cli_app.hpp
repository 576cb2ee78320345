#pragma once

// Command-line front end. Kept in a header so tests can drive run_cli
// in-process.
//
// Exit codes: 0 success, 1 usage error, 2 domain or I/O error, 3 search
// budget exceeded. Failures print {"error": kind, "message": text} on the
// error stream and leave no output files behind.

#include <dquant/dquant.hpp>
#include <dquant/json_io.hpp>

#include <CLI11.hpp>

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace dquant::cli {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// --groups: ';' between groups, ',' between feature indices ("0,1;2").
inline std::vector<std::vector<std::size_t>> parse_groups(const std::string& text) {
  if (text.empty()) throw UsageError("--groups is empty");
  std::vector<std::vector<std::size_t>> groups(1);
  std::string token;
  auto flush = [&] {
    if (token.empty()) return;
    const auto value = dquant::detail::parse_integer(token);
    if (!value || *value < 0) throw UsageError("bad feature index \"" + token + "\" in --groups");
    groups.back().push_back(static_cast<std::size_t>(*value));
    token.clear();
  };
  for (char c : text) {
    if (c == ';') {
      flush();
      groups.emplace_back();
    } else if (c == ',') {
      flush();
    } else if (c != ' ') {
      token += c;
    }
  }
  flush();
  return groups;
}

// --rates: comma-separated bit counts or "unbounded"; a single value applies
// to every node.
inline std::vector<Rate> parse_rates(const std::string& text, std::size_t nodes) {
  std::vector<Rate> rates;
  for (auto piece : dquant::detail::split_commas(text)) {
    const std::string token(piece);
    if (token == "unbounded" || token == "inf") {
      rates.push_back(Rate::unbounded());
      continue;
    }
    const auto value = dquant::detail::parse_integer(token);
    if (!value || *value < 0 || *value > 64) throw UsageError("bad rate \"" + token + "\" in --rates");
    rates.push_back(Rate::bits(static_cast<std::uint32_t>(*value)));
  }
  if (rates.size() == 1 && nodes > 1) rates.assign(nodes, rates.front());
  if (rates.size() != nodes) {
    throw UsageError("--rates lists " + std::to_string(rates.size()) + " rates for " + std::to_string(nodes) +
                     " groups");
  }
  return rates;
}

struct FitOptions {
  std::optional<std::size_t> batch_size;
  std::uint64_t seed = 0;
  std::optional<std::size_t> max_iterations;
  std::uint64_t max_states = SearchBudget{}.max_states;
};

struct FitOutcome {
  GridQuantizer quantizer;
  std::optional<GbiTrace> trace;
};

inline bool is_online(const std::string& algo) { return algo == "online-dp" || algo == "oracle-online"; }

inline FitOutcome fit_algorithm(const std::string& algo, const LabeledDataset& data,
                                const FeaturePartition& partition, const FitOptions& options) {
  if (algo == "gbi") {
    GbiConfig config;
    config.batch_size = options.batch_size;
    config.seed = options.seed;
    config.max_iterations = options.max_iterations;
    auto result = gbi_fit(data, partition, config);
    return {std::move(result.quantizer), std::move(result.trace)};
  }
  if (algo == "oracle-grid") {
    return {brute_force_grid(data, partition, SearchBudget{options.max_states}).quantizer, std::nullopt};
  }
  if (is_online(algo)) {
    if (data.n() != 2) throw DimensionError(algo + " needs n = 2, got n = " + std::to_string(data.n()));
    if (partition.node_count() != 2 || partition.group(0) != std::vector<std::size_t>{0} ||
        partition.group(1) != std::vector<std::size_t>{1}) {
      throw UsageError(algo + " needs the groups 0;1");
    }
    const Rate rate = partition.rate(0);
    if (rate.is_unbounded() || partition.rate(1) != rate || rate.value() == 0) {
      throw UsageError(algo + " needs one common positive finite rate");
    }
    const OnlineSolution solution = algo == "online-dp"
                                        ? solve_online(data, rate.value())
                                        : brute_force_online(data, rate.value(), SearchBudget{options.max_states});
    return {on_the_line_quantizer(solution.boundaries, rate.value()), std::nullopt};
  }
  throw UsageError("unknown algorithm \"" + algo + "\"");
}

inline Json rates_json(const FeaturePartition& partition) {
  Json rates = Json::array();
  for (const auto& r : partition.rates()) rates.push_back(rate_to_json(r));
  return rates;
}

// Files are staged and written only after every result is ready. A failed
// write removes whatever was already written.
class OutputSet {
 public:
  void add(std::string path, std::string content) { files_.emplace_back(std::move(path), std::move(content)); }

  void commit() {
    std::vector<std::string> written;
    for (const auto& [path, content] : files_) {
      std::ofstream out(path, std::ios::binary | std::ios::trunc);
      if (out) out << content;
      if (out) out.close();
      if (!out) {
        std::remove(path.c_str());
        for (const auto& w : written) std::remove(w.c_str());
        throw IoError("cannot write " + path);
      }
      written.push_back(path);
    }
  }

 private:
  std::vector<std::pair<std::string, std::string>> files_;
};

inline std::string csv_text(const LabeledDataset& data) {
  std::ostringstream out;
  write_csv(data, out);
  return out.str();
}

inline std::string json_text(const Json& json) { return json.dump(2) + "\n"; }

inline double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

inline Json error_json(const std::string& kind, const std::string& message) {
  return Json{{"error", kind}, {"message", message}};
}

inline RowPolicy parse_row_policy(const std::string& text) {
  if (text == "distinct") return RowPolicy::kDistinctRows;
  if (text == "midpoint") return RowPolicy::kMidpoint;
  throw UsageError("--row-policy must be distinct or midpoint");
}

inline BcbsLayout parse_layout(const std::string& text) {
  if (text == "separated") return BcbsLayout::kSeparated;
  if (text == "literal") return BcbsLayout::kLiteral;
  throw UsageError("--layout must be separated or literal");
}

inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Design and check distributed quantizers for classification", "dquant"};
  app.require_subcommand(1);

  // synth
  std::string synth_kind, synth_out, synth_graph, synth_graph_out;
  std::size_t synth_count = 100;
  std::uint64_t synth_seed = 0;
  double synth_margin = 0.0;
  std::string synth_row_policy = "distinct", synth_layout = "separated";
  auto* synth = app.add_subcommand("synth", "Write a synthetic or reduction dataset as CSV");
  synth->add_option("--kind", synth_kind, "linear2d | xor | coloring | bcbs")
      ->required()
      ->check(CLI::IsMember({"linear2d", "xor", "coloring", "bcbs"}));
  synth->add_option("--out", synth_out, "CSV output path")->required();
  synth->add_option("--count", synth_count, "linear2d point count");
  synth->add_option("--seed", synth_seed, "linear2d seed");
  synth->add_option("--margin", synth_margin, "linear2d empty band half-width");
  synth->add_option("--graph", synth_graph, "graph JSON for coloring / bcbs");
  synth->add_option("--graph-out", synth_graph_out, "where to copy the source graph (default <out>.graph.json)");
  synth->add_option("--row-policy", synth_row_policy, "coloring rows: distinct | midpoint");
  synth->add_option("--layout", synth_layout, "bcbs layout: separated | literal");

  // fit
  std::string fit_algo, fit_data, fit_groups, fit_rates = "1", fit_out, fit_decoder, fit_report;
  std::size_t fit_batch = 0, fit_max_iterations = 0;
  std::uint64_t fit_seed = 0, fit_max_states = SearchBudget{}.max_states;
  bool fit_stable = false;
  auto* fit = app.add_subcommand("fit", "Fit a quantizer and its majority decoder");
  fit->add_option("--algo", fit_algo, "gbi | online-dp | oracle-grid | oracle-online")
      ->required()
      ->check(CLI::IsMember({"gbi", "online-dp", "oracle-grid", "oracle-online"}));
  fit->add_option("--data", fit_data, "training CSV")->required();
  fit->add_option("--groups", fit_groups, "feature groups, e.g. 0,1;2 (default: one feature per node)");
  fit->add_option("--rates", fit_rates, "bits per node, e.g. 1,2 or unbounded (default 1)");
  fit->add_option("--out", fit_out, "quantizer JSON path")->required();
  fit->add_option("--decoder", fit_decoder, "decoder JSON path (default <out>.decoder.json)");
  fit->add_option("--report", fit_report, "report JSON path (the report is always printed)");
  auto* fit_batch_opt = fit->add_option("--batch-size", fit_batch, "gbi stochastic batch size");
  fit->add_option("--seed", fit_seed, "gbi batch sampling seed");
  auto* fit_iter_opt = fit->add_option("--max-iterations", fit_max_iterations, "gbi iteration cap");
  fit->add_option("--max-states", fit_max_states, "oracle search budget");
  fit->add_flag("--stable-output", fit_stable, "omit wall_time");

  // eval
  std::string eval_quantizer, eval_decoder, eval_data;
  auto* eval = app.add_subcommand("eval", "Evaluate a quantizer and decoder on a dataset");
  eval->add_option("--quantizer", eval_quantizer, "quantizer JSON")->required();
  eval->add_option("--decoder", eval_decoder, "decoder JSON")->required();
  eval->add_option("--data", eval_data, "CSV dataset")->required();

  // reduce
  std::string reduce_kind, reduce_graph, reduce_out;
  std::string reduce_row_policy = "distinct", reduce_layout = "separated";
  bool reduce_verify = false;
  std::uint64_t reduce_max_states = SearchBudget{}.max_states;
  auto* reduce = app.add_subcommand("reduce", "Build a reduction dataset and optionally check the equivalence");
  reduce->add_option("--kind", reduce_kind, "coloring | bcbs")
      ->required()
      ->check(CLI::IsMember({"coloring", "bcbs"}));
  reduce->add_option("--graph", reduce_graph, "graph JSON")->required();
  reduce->add_option("--out", reduce_out, "CSV output path")->required();
  reduce->add_flag("--verify", reduce_verify, "run both exhaustive searches");
  reduce->add_option("--row-policy", reduce_row_policy, "coloring rows: distinct | midpoint");
  reduce->add_option("--layout", reduce_layout, "bcbs layout: separated | literal");
  reduce->add_option("--max-states", reduce_max_states, "search budget");

  // sweep
  std::string sweep_algo = "gbi", sweep_data, sweep_groups, sweep_format = "csv", sweep_out;
  std::uint32_t sweep_from = 1, sweep_to = 4;
  std::uint64_t sweep_seed = 0, sweep_max_states = SearchBudget{}.max_states;
  std::size_t sweep_batch = 0;
  bool sweep_stable = false;
  auto* sweep = app.add_subcommand("sweep", "Fit at every per-node rate in a range");
  sweep->add_option("--algo", sweep_algo, "gbi | online-dp | oracle-grid | oracle-online")
      ->check(CLI::IsMember({"gbi", "online-dp", "oracle-grid", "oracle-online"}));
  sweep->add_option("--data", sweep_data, "training CSV")->required();
  sweep->add_option("--groups", sweep_groups, "feature groups (default: one feature per node)");
  sweep->add_option("--rates-from", sweep_from, "first rate")->required();
  sweep->add_option("--rates-to", sweep_to, "last rate")->required();
  sweep->add_option("--format", sweep_format, "csv | json")->check(CLI::IsMember({"csv", "json"}));
  sweep->add_option("--out", sweep_out, "table path (default: standard output)");
  auto* sweep_batch_opt = sweep->add_option("--batch-size", sweep_batch, "gbi stochastic batch size");
  sweep->add_option("--seed", sweep_seed, "gbi batch sampling seed");
  sweep->add_option("--max-states", sweep_max_states, "oracle search budget");
  sweep->add_flag("--stable-output", sweep_stable, "omit the runtime column");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << error_json("UsageError", e.what()).dump() << "\n";
    return 1;
  }

  auto load_partition = [](const std::string& groups_text, const std::string& rates_text, std::size_t n,
                           const std::optional<Rate>& uniform) {
    std::vector<std::vector<std::size_t>> groups;
    if (groups_text.empty()) {
      for (std::size_t f = 0; f < n; ++f) groups.push_back({f});
    } else {
      groups = parse_groups(groups_text);
    }
    const std::vector<Rate> rates =
        uniform ? std::vector<Rate>(groups.size(), *uniform) : parse_rates(rates_text, groups.size());
    try {
      return FeaturePartition(n, groups, rates);
    } catch (const error& e) {
      throw UsageError(std::string("bad --groups / --rates: ") + e.what());
    }
  };

  try {
    if (synth->parsed()) {
      LabeledDataset data = [&] {
        if (synth_kind == "linear2d") return synth_linear2d(synth_count, synth_seed, synth_margin);
        if (synth_kind == "xor") return synth_xor();
        if (synth_graph.empty()) throw UsageError("--kind " + synth_kind + " needs --graph");
        const Json graph = load_json(synth_graph);
        if (synth_kind == "coloring") return coloring_dataset(graph_from_json(graph), parse_row_policy(synth_row_policy));
        return bcbs_dataset(bipartite_from_json(graph), parse_layout(synth_layout));
      }();
      OutputSet files;
      files.add(synth_out, csv_text(data));
      Json summary{{"kind", synth_kind}, {"out", synth_out}, {"N", data.size()}, {"n", data.n()},
                   {"classes", data.num_classes()}};
      if (synth_kind == "coloring" || synth_kind == "bcbs") {
        const std::string graph_out = synth_graph_out.empty() ? synth_out + ".graph.json" : synth_graph_out;
        const Json graph = load_json(synth_graph);
        files.add(graph_out, json_text(synth_kind == "coloring" ? graph_to_json(graph_from_json(graph))
                                                                : bipartite_to_json(bipartite_from_json(graph))));
        summary["graph_out"] = graph_out;
      }
      files.commit();
      out << json_text(summary);
      return 0;
    }

    if (fit->parsed()) {
      const auto start = std::chrono::steady_clock::now();
      const LabeledDataset data = load_csv(fit_data);
      const FeaturePartition partition = load_partition(fit_groups, fit_rates, data.n(), std::nullopt);
      FitOptions options;
      if (*fit_batch_opt) options.batch_size = fit_batch;
      if (*fit_iter_opt) options.max_iterations = fit_max_iterations;
      options.seed = fit_seed;
      options.max_states = fit_max_states;
      const FitOutcome outcome = fit_algorithm(fit_algo, data, partition, options);
      const DecoderTable decoder = fit_optimal_decoder(outcome.quantizer, data);
      const std::size_t wrong = misclassified_count(outcome.quantizer, decoder, data);

      Json counts = Json::array();
      for (const auto& d : outcome.quantizer.all_boundaries()) counts.push_back(d.size());
      Json report{{"algorithm", fit_algo},
                  {"dataset", {{"N", data.size()}, {"n", data.n()}, {"classes", data.num_classes()}}},
                  {"groups", partition.groups()},
                  {"rates", rates_json(partition)},
                  {"misclassified", wrong},
                  {"N", data.size()},
                  {"loss", static_cast<double>(wrong) / static_cast<double>(data.size())},
                  {"accuracy", static_cast<double>(data.size() - wrong) / static_cast<double>(data.size())},
                  {"boundary_counts", counts}};
      if (outcome.trace) report["trace"] = trace_to_json(*outcome.trace);
      if (!fit_stable) report["wall_time"] = seconds_since(start);

      OutputSet files;
      files.add(fit_out, json_text(quantizer_to_json(outcome.quantizer)));
      files.add(fit_decoder.empty() ? fit_out + ".decoder.json" : fit_decoder, json_text(decoder_to_json(decoder)));
      if (!fit_report.empty()) files.add(fit_report, json_text(report));
      files.commit();
      out << json_text(report);
      return 0;
    }

    if (eval->parsed()) {
      const GridQuantizer quantizer = quantizer_from_json(load_json(eval_quantizer));
      const DecoderTable decoder = decoder_from_json(load_json(eval_decoder));
      const LabeledDataset data = load_csv(eval_data);
      const std::size_t wrong = misclassified_count(quantizer, decoder, data);
      out << json_text(Json{{"misclassified", wrong},
                            {"N", data.size()},
                            {"loss", static_cast<double>(wrong) / static_cast<double>(data.size())},
                            {"accuracy", static_cast<double>(data.size() - wrong) / static_cast<double>(data.size())}});
      return 0;
    }

    if (reduce->parsed()) {
      const Json graph = load_json(reduce_graph);
      const SearchBudget budget{reduce_max_states};
      Json report{{"kind", reduce_kind}, {"out", reduce_out}};
      std::optional<LabeledDataset> data;
      if (reduce_kind == "coloring") {
        const UndirectedGraph g = graph_from_json(graph);
        const RowPolicy policy = parse_row_policy(reduce_row_policy);
        data = coloring_dataset(g, policy);
        if (reduce_verify) {
          const ColoringCheck check = verify_coloring_equivalence(g, budget, policy);
          report["chromatic"] = check.chromatic;
          report["min_bins"] = check.min_bins;
          report["equal"] = check.equal;
        }
      } else {
        const BipartiteGraph g = bipartite_from_json(graph);
        const BcbsLayout layout = parse_layout(reduce_layout);
        data = bcbs_dataset(g, layout);
        if (reduce_verify) {
          const BcbsCheck check = verify_bcbs_equivalence(g, budget, layout);
          report["biclique"] = check.biclique;
          report["bins"] = check.min_bins;
          report["equal"] = check.equal;
        }
      }
      report["N"] = data->size();
      OutputSet files;
      files.add(reduce_out, csv_text(*data));
      files.commit();
      out << json_text(report);
      return 0;
    }

    if (sweep->parsed()) {
      if (sweep_from > sweep_to) throw UsageError("--rates-from must not exceed --rates-to");
      if (sweep_to > 64) throw UsageError("--rates-to must be at most 64");
      const LabeledDataset data = load_csv(sweep_data);
      FitOptions options;
      if (*sweep_batch_opt) options.batch_size = sweep_batch;
      options.seed = sweep_seed;
      options.max_states = sweep_max_states;

      Json rows = Json::array();
      std::ostringstream csv;
      csv << "rate,misclassified,N,loss,accuracy" << (sweep_stable ? "" : ",runtime") << "\n";
      for (std::uint32_t rate = sweep_from; rate <= sweep_to; ++rate) {
        const auto start = std::chrono::steady_clock::now();
        const FeaturePartition partition = load_partition(sweep_groups, "", data.n(), Rate::bits(rate));
        const FitOutcome outcome = fit_algorithm(sweep_algo, data, partition, options);
        const std::size_t wrong = optimal_misclassified(outcome.quantizer, data);
        const double runtime = seconds_since(start);
        const double loss = static_cast<double>(wrong) / static_cast<double>(data.size());
        const double accuracy = static_cast<double>(data.size() - wrong) / static_cast<double>(data.size());
        Json row{{"rate", rate}, {"misclassified", wrong}, {"N", data.size()}, {"loss", loss}, {"accuracy", accuracy}};
        csv << rate << "," << wrong << "," << data.size() << "," << dquant::detail::format_real(loss) << ","
            << dquant::detail::format_real(accuracy);
        if (!sweep_stable) {
          row["runtime"] = runtime;
          csv << "," << dquant::detail::format_real(runtime);
        }
        csv << "\n";
        rows.push_back(std::move(row));
      }
      const std::string table = sweep_format == "csv" ? csv.str() : json_text(Json{{"algorithm", sweep_algo}, {"rows", rows}});
      if (sweep_out.empty()) {
        out << table;
      } else {
        OutputSet files;
        files.add(sweep_out, table);
        files.commit();
        out << json_text(Json{{"out", sweep_out}, {"rows", rows.size()}});
      }
      return 0;
    }
  } catch (const UsageError& e) {
    err << error_json("UsageError", e.what()).dump() << "\n";
    return 1;
  } catch (const BudgetExceeded& e) {
    err << error_json(e.kind(), e.what()).dump() << "\n";
    return 3;
  } catch (const error& e) {
    err << error_json(e.kind(), e.what()).dump() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << error_json("Error", e.what()).dump() << "\n";
    return 2;
  }
  return 1;
}

inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"dquant"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace dquant::cli
