// nscli: command-line front end for the nsc library.
//
// Exit codes: 0 success, 1 domain error (JSON on stderr) or failed axiom
// check, 2 usage error.

#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "nsc/io.hpp"
#include "nsc/recovery.hpp"

namespace {

using nsc::io::json;

struct Common {
  std::string out;
  double tol = nsc::kDefaultTolerance;
  std::size_t threads = std::max(1u, std::thread::hardware_concurrency());
};

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-")
    std::cout << text;
  else
    nsc::io::write_file(path, text);
}

nsc::ChoiceTable load_table(const std::string& path) {
  return nsc::io::table_from_json(nsc::io::parse(nsc::io::read_file(path)));
}

nsc::NestStructure structure_from_sizes(const std::vector<std::size_t>& sizes) {
  std::vector<std::size_t> labels;
  for (std::size_t k = 0; k < sizes.size(); ++k) labels.insert(labels.end(), sizes[k], k);
  if (labels.empty()) throw nsc::Error("invalid-config", "block sizes must be positive");
  return nsc::NestStructure::from_labels(labels);
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw CLI::ValidationError("--deltas", "not a number: " + item);
    }
  }
  return out;
}

void add_range(CLI::App* app, const std::string& name, std::pair<double, double>& r, const std::string& what) {
  app->add_option(name, r, what + " (two positive numbers)")->expected(2)->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nested stochastic choice: simulate, identify, test axioms and invert models"};
  app.require_subcommand(1);
  Common c;
  auto common = [&](CLI::App* s, bool threads = false) {
    s->add_option("-o,--out", c.out, "Output path (default stdout)");
    s->add_option("--tol", c.tol, "Log-space tolerance")->capture_default_str();
    if (threads) s->add_option("--threads", c.threads, "Worker threads (results do not depend on it)")->capture_default_str();
  };

  // simulate
  std::vector<std::size_t> sizes{3, 3};
  std::pair<double, double> urange{0.5, 2.0}, vrange{0.5, 2.0};
  std::vector<double> etas;
  std::uint64_t seed = 0;
  std::string table_out;
  auto* sim = app.add_subcommand("simulate", "Draw a random nondegenerate NSC model and its choice table");
  sim->add_option("--blocks", sizes, "Block sizes, e.g. 3 3")->capture_default_str();
  add_range(sim, "--u-range", urange, "Uniform range for u");
  add_range(sim, "--v-range", vrange, "Uniform range for v");
  sim->add_option("--eta", etas, "Nested-logit exponents per block (replaces random v)");
  sim->add_option("--seed", seed, "Random seed")->required();
  sim->add_option("--table-out", table_out, "Also write the full choice table here");
  common(sim);

  // sample
  std::string table_path;
  std::uint64_t per_menu = 1000;
  double delta = 0.0;
  auto* smp = app.add_subcommand("sample", "Draw a multinomial dataset from a choice table");
  smp->add_option("--table", table_path, "Choice table JSON")->required()->check(CLI::ExistingFile);
  smp->add_option("--per-menu", per_menu, "Observations per menu")->capture_default_str();
  smp->add_option("--delta", delta, "Uniform perturbation applied before sampling")->capture_default_str();
  smp->add_option("--seed", seed, "Random seed")->required();
  common(smp);

  // identify
  std::string data_path;
  bool reduced = false, smoothing = false;
  std::size_t top = 0;
  auto* idf = app.add_subcommand("identify", "Rank nest structures by the identification loss");
  idf->add_option("--data", data_path, "Dataset CSV (menu_id,alternative,count)")->required()->check(CLI::ExistingFile);
  idf->add_flag("--reduced", reduced, "Score only the threshold candidates");
  idf->add_flag("--smoothing", smoothing, "Add half a count to every cell");
  idf->add_option("--top", top, "Keep only the best K partitions (0 = all)")->capture_default_str();
  common(idf, true);

  // check
  std::vector<std::string> axioms{"iia", "isa", "iaa"};
  auto* chk = app.add_subcommand("check", "Test behavioural axioms on a choice table");
  chk->add_option("--table", table_path, "Choice table JSON")->required()->check(CLI::ExistingFile);
  chk->add_option("--axioms", axioms,
                  "Comma-separated list from: iia isa iaa similarity-effect regularity similar-regularity "
                  "dissimilar-regularity lri rli isa-1 isa-2 gisa consistency")
      ->delimiter(',')
      ->capture_default_str();
  common(chk);

  // recover
  std::string kind = "nsc";
  auto* rec = app.add_subcommand("recover", "Invert an exact choice table into model parameters");
  rec->add_option("--table", table_path, "Choice table JSON")->required()->check(CLI::ExistingFile);
  rec->add_option("--kind", kind, "nsc or three-step")->check(CLI::IsMember({"nsc", "three-step"}))->capture_default_str();
  common(rec);

  // fit-eta
  std::string model_path;
  auto* eta = app.add_subcommand("fit-eta", "Recover nested-logit exponents from an NSC model or exact table");
  auto* eta_model = eta->add_option("--model", model_path, "NSC model JSON")->check(CLI::ExistingFile);
  auto* eta_table = eta->add_option("--table", table_path, "Choice table JSON (recovered first)")->check(CLI::ExistingFile);
  eta_model->excludes(eta_table);
  common(eta);

  // fit-cnl
  nsc::SolverOverrides so;
  std::string diag_out;
  auto* cnl = app.add_subcommand("fit-cnl", "Represent a positive table as a cross-nested logit");
  cnl->add_option("--table", table_path, "Choice table JSON")->required()->check(CLI::ExistingFile);
  cnl->add_option("--lambda-factor", so.lambda_factor, "lambda as a multiple of lambda* (> 1)")->capture_default_str();
  cnl->add_option("--damping", so.damping, "Fixed-point damping in (0, 1]")->capture_default_str();
  cnl->add_option("--max-iters", so.max_iters, "Iteration cap before the Newton fallback")->capture_default_str();
  cnl->add_option("--residual-tol", so.residual_tol, "Fixed-point residual tolerance")->capture_default_str();
  cnl->add_option("--diagnostics", diag_out, "Write the residual trace and brackets here");
  common(cnl);

  // replicate-figure
  std::string deltas = "0,0.01,0.025,0.035,0.05,0.075", mode = "perturbation";
  nsc::SimConfig cfg;
  auto* rep = app.add_subcommand("replicate-figure", "Identification rate per noise level on random 3+3 models");
  rep->add_option("--deltas", deltas, "Comma-separated noise levels")->capture_default_str();
  rep->add_option("--trials", cfg.trials, "Trials per noise level")->capture_default_str();
  rep->add_option("--blocks", sizes, "Block sizes of the true structure")->capture_default_str();
  add_range(rep, "--u-range", urange, "Uniform range for u");
  add_range(rep, "--v-range", vrange, "Uniform range for v");
  rep->add_option("--mode", mode, "perturbation or multinomial")
      ->check(CLI::IsMember({"perturbation", "multinomial"}))
      ->capture_default_str();
  rep->add_option("--per-menu", cfg.per_menu, "Observations per menu in multinomial mode")->capture_default_str();
  rep->add_flag("--reduced", reduced, "Use the reduced candidate search");
  rep->add_flag("--smoothing", smoothing, "Smooth zero counts (multinomial mode)");
  rep->add_option("--seed", seed, "Random seed")->required();
  common(rep, true);

  // distance
  auto* dst = app.add_subcommand("distance", "Pairwise IIA-deviation distances as CSV");
  dst->add_option("--data", data_path, "Dataset CSV")->required()->check(CLI::ExistingFile);
  dst->add_flag("--smoothing", smoothing, "Add half a count to every cell");
  common(dst);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*sim) {
      nsc::SimConfig sc;
      sc.structure = structure_from_sizes(sizes);
      sc.u_low = urange.first, sc.u_high = urange.second;
      sc.v_low = vrange.first, sc.v_high = vrange.second;
      sc.tol = c.tol;
      nsc::Rng rng = nsc::stream(seed, {});
      json model;
      nsc::ChoiceTable table;
      if (!etas.empty()) {
        if (etas.size() != sc.structure.size()) throw nsc::Error("invalid-config", "one eta per block is required");
        std::uniform_real_distribution<double> du(sc.u_low, sc.u_high);
        nsc::NestedLogitModel m{nsc::Universe::indexed(sc.structure.universe_size()), sc.structure, {}, etas};
        for (std::size_t i = 0; i < sc.structure.universe_size(); ++i) m.u.push_back(du(rng));
        m.validate();
        model = nsc::io::model_json(m);
        table = nsc::full_choice_table(m);
      } else {
        const auto rm = nsc::random_nsc(sc, rng);
        model = nsc::io::model_json(rm.model);
        model["rejections"] = rm.rejections;
        model["flags"] = rm.flags;
        table = nsc::full_choice_table(rm.model);
      }
      emit(c.out, nsc::io::dump(model));
      if (!table_out.empty()) nsc::io::write_file(table_out, nsc::io::dump(nsc::io::table_json(table)));
    } else if (*smp) {
      nsc::Rng rng = nsc::stream(seed, {});
      const auto t = nsc::perturb_table(load_table(table_path), delta, rng);
      emit(c.out, nsc::io::dataset_csv(nsc::sample_dataset(t, per_menu, rng)));
    } else if (*idf) {
      const auto data = nsc::io::dataset_from_csv(nsc::io::read_file(data_path));
      nsc::IdentifyOptions opt;
      opt.smoothing = smoothing;
      opt.threads = c.threads;
      opt.top_k = top;
      const auto r = reduced ? nsc::identify_reduced(data, opt) : nsc::identify_full(data, opt);
      emit(c.out, nsc::io::dump(nsc::io::identification_json(data.universe(), r)));
    } else if (*chk) {
      const auto t = load_table(table_path);
      json reports = json::array();
      bool all = true;
      for (const auto& a : axioms) {
        nsc::AxiomReport r;
        if (a == "iia") r = nsc::check_iia(t, c.tol);
        else if (a == "isa") r = nsc::check_isa(t, c.tol);
        else if (a == "iaa") r = nsc::check_iaa(t, c.tol);
        else if (a == "similarity-effect") r = nsc::check_similarity_effect(t, c.tol);
        else if (a == "regularity") r = nsc::check_regularity(t, c.tol);
        else if (a == "similar-regularity") r = nsc::check_similar_regularity(t, c.tol);
        else if (a == "dissimilar-regularity") r = nsc::check_dissimilar_regularity(t, c.tol);
        else if (a == "lri") r = nsc::check_lri(t, c.tol);
        else if (a == "rli") r = nsc::check_rli(t, c.tol);
        else if (a == "isa-1") r = nsc::check_isa1(t, c.tol);
        else if (a == "isa-2") r = nsc::check_isa2(t, c.tol);
        else if (a == "gisa") r = nsc::check_gisa(t, c.tol);
        else if (a == "consistency") r = nsc::check_consistency(t, c.tol);
        else {
          std::cerr << "unknown axiom: " << a << "\n";
          return 2;
        }
        all = all && r.passed;
        reports.push_back(nsc::io::axiom_report_json(t.universe(), r));
      }
      emit(c.out, nsc::io::dump(reports));
      return all ? 0 : 1;
    } else if (*rec) {
      const auto t = load_table(table_path);
      if (kind == "nsc") {
        emit(c.out, nsc::io::dump(nsc::io::model_json(nsc::recover_nsc(t, c.tol))));
      } else {
        const auto r = nsc::recover_three_step(t, c.tol);
        json j = nsc::io::model_json(r.model);
        j["flags"] = r.flags;
        emit(c.out, nsc::io::dump(j));
      }
    } else if (*eta) {
      nsc::NscModel m;
      if (!model_path.empty())
        m = *nsc::io::model_from_json(nsc::io::parse(nsc::io::read_file(model_path))).nsc;
      else if (!table_path.empty())
        m = nsc::recover_nsc(load_table(table_path), c.tol);
      else
        throw CLI::RequiredError("--model or --table");
      const auto r = nsc::recover_eta(m, c.tol);
      if (!r.model) {
        const std::size_t k = *r.failed_block;
        throw nsc::Error("not-nested-logit", "nest values are not a power of the utility sum",
                         json{{"block", nsc::io::partition_json(m.universe, m.structure)[k]},
                              {"subset", m.universe.names(r.witness)},
                              {"log_error", r.worst_log_error}}
                             .dump());
      }
      json j = nsc::io::model_json(*r.model);
      j["delta"] = r.delta;
      j["worst_log_error"] = r.worst_log_error;
      emit(c.out, nsc::io::dump(j));
    } else if (*cnl) {
      const auto sol = nsc::solve_cnl(load_table(table_path), so);
      emit(c.out, nsc::io::dump(nsc::io::cnl_json(sol.model)));
      if (!diag_out.empty()) nsc::io::write_file(diag_out, nsc::io::dump(nsc::io::cnl_diagnostics_json(sol.diagnostics)));
    } else if (*rep) {
      cfg.structure = structure_from_sizes(sizes);
      cfg.u_low = urange.first, cfg.u_high = urange.second;
      cfg.v_low = vrange.first, cfg.v_high = vrange.second;
      cfg.mode = mode == "multinomial" ? nsc::SamplingMode::multinomial : nsc::SamplingMode::perturbation;
      cfg.reduced_search = reduced;
      cfg.smoothing = smoothing;
      cfg.seed = seed;
      cfg.threads = c.threads;
      cfg.tol = c.tol;
      emit(c.out, nsc::io::rates_csv(nsc::replicate_figure(parse_list(deltas), cfg)));
    } else if (*dst) {
      const auto data = nsc::io::dataset_from_csv(nsc::io::read_file(data_path));
      emit(c.out, nsc::io::distance_csv(nsc::distance_matrix(data, smoothing)));
    }
  } catch (const CLI::Error& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const nsc::Error& e) {
    std::cerr << nsc::io::error_json(e).dump() << "\n";
    return 1;
  }
  return 0;
}
