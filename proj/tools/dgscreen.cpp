// dgscreen: command-line front end of the screening pipeline.

#include <CLI11.hpp>
#include <httplib.h>

#include <csignal>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>

#include "dgscreen/augment.hpp"
#include "dgscreen/c45.hpp"
#include "dgscreen/condition.hpp"
#include "dgscreen/evaluation.hpp"
#include "dgscreen/features.hpp"
#include "dgscreen/http.hpp"
#include "dgscreen/pipeline.hpp"
#include "dgscreen/service.hpp"
#include "dgscreen/session_log.hpp"
#include "dgscreen/simulate.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace dgscreen;

namespace {

constexpr int kExitUnsuitable = 3;

std::map<Profile, std::size_t> parse_counts(const std::string& text) {
  std::map<Profile, std::size_t> counts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ConfigError("bad count \"" + item + "\", want profile=N");
    auto profile = parse_profile(item.substr(0, eq));
    if (!profile) throw ConfigError("unknown profile \"" + item.substr(0, eq) + "\"");
    counts[*profile] = std::stoul(item.substr(eq + 1));
  }
  return counts;
}

std::vector<SessionRecord> game1_records(const std::vector<LabeledSession>& sessions) {
  std::vector<SessionRecord> out;
  for (const auto& s : sessions) {
    const SessionRecord* r = s.find(GameStage::game1);
    if (!r) throw IncompleteSession("session " + s.session_id + " has no game1 record");
    out.push_back(*r);
  }
  return out;
}

void write_sessions(const fs::path& dir, const std::vector<LabeledSession>& sessions) {
  fs::create_directories(dir);
  for (const auto& s : sessions) write_session_file(dir / (s.session_id + ".json"), s);
}

void print_json(const json& doc) { std::cout << doc.dump(2) << '\n'; }

std::vector<fs::path> as_paths(const std::vector<std::string>& v) {
  return {v.begin(), v.end()};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dysgraphia risk screening pipeline"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Generate a synthetic cohort of session logs");
  std::string sim_counts;
  std::uint64_t sim_seed = 1;
  std::string sim_out, sim_config;
  sim->add_option("--counts", sim_counts, "e.g. normal=45,dysgraphic=30,confused=0")->required();
  sim->add_option("--seed", sim_seed);
  sim->add_option("--out", sim_out, "Output directory")->required();
  sim->add_option("--config", sim_config, "Simulator profile overrides (JSON)");

  // calibrate
  auto* cal = app.add_subcommand("calibrate", "Calibrate the condition detector");
  std::string cal_confused, cal_normal, cal_out;
  cal->add_option("--confused", cal_confused, "Directory of confused-group logs")->required();
  cal->add_option("--normal", cal_normal, "Directory of normal-group logs")->required();
  cal->add_option("--out", cal_out, "Calibration file")->required();

  // detect
  auto* det = app.add_subcommand("detect", "Check one session's test conditions");
  std::string det_stats, det_session;
  det->add_option("--stats", det_stats, "Calibration file")->required();
  det->add_option("--session", det_session, "Session log")->required();

  // augment
  auto* aug = app.add_subcommand("augment", "Balance the minority class by recombination");
  std::string aug_in, aug_out;
  std::size_t aug_target = 0;
  std::uint64_t aug_seed = 1;
  aug->add_option("--in", aug_in, "Directory of minority-class session logs")->required();
  aug->add_option("--target-count", aug_target)->required();
  aug->add_option("--seed", aug_seed);
  aug->add_option("--out", aug_out, "Output directory for new records")->required();

  // features
  auto* fea = app.add_subcommand("features", "Summarize sessions into a feature table");
  std::vector<std::string> fea_in;
  std::string fea_out;
  fea->add_option("--in", fea_in, "Session logs or directories")->required();
  fea->add_option("--out", fea_out, "CSV table")->required();

  // train
  auto* trn = app.add_subcommand("train", "Train and prune a C4.5 tree");
  std::string trn_features, trn_out;
  TrainParams params;
  trn->add_option("--features", trn_features, "Labeled CSV table")->required();
  trn->add_option("--out", trn_out, "Model file")->required();
  trn->add_option("--cf", params.confidence_factor, "Pruning confidence factor");
  trn->add_option("--min-split", params.min_split, "Minimum rows to split a node");
  bool trn_no_prune = false;
  trn->add_flag("--no-prune", trn_no_prune, "Keep the fully grown tree");

  // predict
  auto* prd = app.add_subcommand("predict", "Classify rows of a feature table");
  std::string prd_model, prd_features;
  prd->add_option("--model", prd_model)->required();
  prd->add_option("--features", prd_features)->required();

  // screen
  auto* scr = app.add_subcommand("screen", "Run detector gate and classifier on one session");
  std::string scr_session, scr_model, scr_cal;
  bool scr_bypass = false;
  scr->add_option("--session", scr_session)->required();
  scr->add_option("--model", scr_model)->required();
  scr->add_option("--calibration", scr_cal)->required();
  scr->add_flag("--bypass-detector", scr_bypass, "Research replay: classify even when flagged");

  // evaluate
  auto* evl = app.add_subcommand("evaluate", "Screen labeled sessions and tabulate the outcome");
  std::vector<std::string> evl_in;
  std::string evl_model, evl_cal, evl_out;
  evl->add_option("--in", evl_in, "Labeled session logs or directories")->required();
  evl->add_option("--model", evl_model)->required();
  evl->add_option("--calibration", evl_cal)->required();
  evl->add_option("--out", evl_out, "Write the evaluation as JSON");

  // run-study
  auto* study = app.add_subcommand("run-study", "End-to-end synthetic train/test study");
  std::uint64_t study_seed = 1;
  std::string study_out, study_config;
  auto* seed_opt = study->add_option("--seed", study_seed);
  study->add_option("--out", study_out, "Report file")->required();
  study->add_option("--config", study_config, "Study config overrides (JSON)");

  // serve
  auto* srv = app.add_subcommand("serve", "Run the HTTP screening service");
  int srv_port = 8080;
  std::string srv_host = "127.0.0.1", srv_store, srv_model, srv_cal;
  srv->add_option("--port", srv_port);
  srv->add_option("--host", srv_host);
  srv->add_option("--store", srv_store)->required();
  srv->add_option("--model", srv_model);
  srv->add_option("--calibration", srv_cal);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sim) {
      ProfileConfig config;
      if (!sim_config.empty()) config = profile_config_from_json(read_json_file(sim_config));
      write_sessions(sim_out, simulate_cohort(parse_counts(sim_counts), config, sim_seed));
    } else if (*cal) {
      const auto confused = game1_records(read_sessions({cal_confused}));
      const auto normal = game1_records(read_sessions({cal_normal}));
      write_json_file(cal_out, to_json(calibrate(confused, normal)));
    } else if (*det) {
      const CohortStats stats = cohort_stats_from_json(read_json_file(det_stats));
      const LabeledSession s = read_session_file(det_session);
      const SessionRecord* g1 = s.find(GameStage::game1);
      if (!g1) throw IncompleteSession("session has no game1 record");
      const ConditionVerdict v = detect_condition(*g1, stats);
      print_json(to_json(v));
      return v.suitable ? 0 : kExitUnsuitable;
    } else if (*aug) {
      const auto minority = read_sessions({aug_in});
      write_sessions(aug_out, augment_sessions(minority, aug_target, aug_seed));
    } else if (*fea) {
      const auto sessions = read_sessions(as_paths(fea_in));
      write_csv_file(fea_out, make_feature_table(sessions));
    } else if (*trn) {
      const Dataset data = Dataset::from_table(read_csv_file(trn_features));
      const DecisionTree tree = trn_no_prune ? train(data, params) : fit(data, params);
      write_json_file(trn_out, serialize(tree));
      std::cerr << "trained " << tree.num_leaves() << " leaves, depth " << tree.depth()
                << ", model_version " << tree.fingerprint() << '\n';
    } else if (*prd) {
      const DecisionTree tree = deserialize(read_json_file(prd_model));
      const FeatureTable table = read_csv_file(prd_features);
      std::cout << "row,prediction\n";
      for (std::size_t i = 0; i < table.rows.size(); ++i) {
        std::cout << i << ',' << to_string(predict(tree, table.rows[i].values)) << '\n';
      }
    } else if (*scr) {
      const LabeledSession s = read_session_file(scr_session);
      const CohortStats stats = cohort_stats_from_json(read_json_file(scr_cal));
      const DecisionTree tree = deserialize(read_json_file(scr_model));
      const ScreeningOutcome o = screen_session(s, stats, tree, nullptr, scr_bypass);
      json out = {{"session_id", s.session_id}, {"detector", to_json(o.verdict)}};
      if (!o.verdict.suitable && !scr_bypass) {
        out["verdict"] = std::string(to_string(Verdict::unsuitable_conditions));
      } else {
        out["verdict"] = std::string(to_string(
            *o.predicted == Label::dysgraphic ? Verdict::at_risk_dysgraphia : Verdict::typical));
      }
      out["model_version"] = tree.fingerprint();
      print_json(out);
      return o.verdict.suitable || scr_bypass ? 0 : kExitUnsuitable;
    } else if (*evl) {
      const auto sessions = read_sessions(as_paths(evl_in));
      const CohortStats stats = cohort_stats_from_json(read_json_file(evl_cal));
      const DecisionTree tree = deserialize(read_json_file(evl_model));
      const Evaluation ev = evaluate_sessions(sessions, stats, tree);
      json out = {{"matrix", to_json(ev.matrix)},
                  {"participants", sessions.size()},
                  {"overall_accuracy", overall_accuracy(ev.matrix, sessions.size())}};
      if (!evl_out.empty()) write_json_file(evl_out, out);
      print_json(out);
    } else if (*study) {
      StudyConfig config;
      if (!study_config.empty()) config = study_config_from_json(read_json_file(study_config));
      if (seed_opt->count() > 0) config.seed = study_seed;
      const StudyReport report = run_study(config);
      write_json_file(study_out, to_json(report));
      const auto& m = report.evaluation.matrix;
      std::cout << "overall accuracy " << report.overall_accuracy << "% (tp=" << m.tp
                << " tn=" << m.tn << " fp=" << m.fp << " fn=" << m.fn
                << " flagged=" << m.flagged_unsuitable << " confirmed=" << m.flagged_confirmed
                << ")\n";
    } else if (*srv) {
      ScreeningService service(srv_store);
      if (!srv_model.empty()) service.load_model(read_json_file(srv_model));
      if (!srv_cal.empty()) service.load_calibration(read_json_file(srv_cal));
      httplib::Server server;
      register_routes(server, service);
      std::cerr << "listening on " << srv_host << ':' << srv_port << '\n';
      if (!server.listen(srv_host, srv_port)) {
        std::cerr << "error: cannot listen on " << srv_host << ':' << srv_port << '\n';
        return 1;
      }
    }
  } catch (const SchemaError& e) {
    std::cerr << "error: schema violation\n";
    for (const auto& v : e.violations()) std::cerr << "  " << v << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
