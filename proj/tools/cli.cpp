#include "cli.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <iostream>
#include <optional>

#include "probemb/checkpoint.hpp"
#include "probemb/embedding_io.hpp"
#include "probemb/evaluation.hpp"
#include "probemb/inference.hpp"
#include "probemb/model.hpp"
#include "probemb/report_io.hpp"
#include "probemb/synthetic.hpp"
#include "probemb/trainer.hpp"

namespace probemb::cli {
namespace {

struct GenSynthArgs {
  std::string out;
  SynthConfig config;
  std::vector<double> kappa_text;
};

struct TrainArgs {
  std::string text_emb, image_emb, pairs, out;
  std::string dist = "vmf", variant = "asym-text", loss = "infonce";
  TrainConfig train;
  int hidden = 512;
  bool no_normalize = false;
};

struct EvalArgs {
  std::string model, text_emb, image_emb, pairs, report;
  int bins = 5;
  bool group_stats = false;
  bool no_normalize = false;
};

struct RetrieveArgs {
  std::string model, direction = "t2i", embeddings, queries;
  std::int64_t query_index = 0;
  int top_k = 5;
  bool no_normalize = false;
};

struct ClassifyArgs {
  std::string model, image_emb, class_emb, rule = "none";
  std::optional<std::int64_t> dummy_index;
  std::optional<double> threshold, margin;
  bool no_normalize = false;
};

Matrix load_points(const std::string& path, bool no_normalize) {
  Matrix m = read_embeddings(path);
  if (!no_normalize) {
    normalize_rows_inplace(m);
  }
  return m;
}

void check_model_dim(const Model& model, Eigen::Index d, const std::string& what) {
  if (d != model.config.d_in) {
    throw DomainError(what + " dimension " + std::to_string(d) +
                      " does not match model dimension " + std::to_string(model.config.d_in));
  }
}

int run_gen_synth(const GenSynthArgs& a, std::ostream& out) {
  SynthConfig c = a.config;
  if (c.levels != 4) {
    c.reset_level_schedules();
  }
  if (!a.kappa_text.empty()) {
    c.kappa_text_by_level = a.kappa_text;
  }
  write_synthetic(c, a.out);
  out << "wrote synthetic dataset to " << a.out << " (" << c.n_objects << " objects, "
      << c.heldout_objects << " held out, " << c.captions_per_object << " captions each, d="
      << c.dim << ")\n";
  return kOk;
}

int run_train(const TrainArgs& a, std::ostream& out) {
  TrainConfig tc = a.train;
  tc.loss = loss_from_string(a.loss);
  AdapterConfig ac;
  ac.family = family_from_string(a.dist);
  ac.variant = variant_from_string(a.variant);
  ac.d_hidden = a.hidden;
  const PairedEmbeddingDataset ds =
      load_dataset(a.text_emb, a.image_emb, a.pairs, !a.no_normalize);
  ac.d_in = ds.dim();
  const TrainResult r = train(tc, ac, ds);
  save_checkpoint(a.out, r.model);
  out << "trained " << to_string(ac.family) << "/" << to_string(ac.variant) << " for "
      << tc.epochs << " epochs";
  if (!r.history.epoch_loss.empty()) {
    out << ", final epoch loss " << r.history.epoch_loss.back();
  }
  out << "; wrote " << a.out << "\n";
  return kOk;
}

int run_eval(const EvalArgs& a, std::ostream& out) {
  const Model model = load_checkpoint(a.model);
  const PairedEmbeddingDataset ds =
      load_dataset(a.text_emb, a.image_emb, a.pairs, !a.no_normalize);
  const EvalReport rep = build_report(model, ds, a.bins, a.group_stats);
  write_report(a.report, rep);
  out << "recall@1 t2i " << rep.overall_recall1_t2i << ", i2t " << rep.overall_recall1_i2t
      << ", S t2i " << rep.spearman_t2i << "; wrote " << a.report << "\n";
  return kOk;
}

int run_retrieve(const RetrieveArgs& a, std::ostream& out) {
  const Model model = load_checkpoint(a.model);
  const Matrix candidates = load_points(a.embeddings, a.no_normalize);
  const Matrix queries = a.queries.empty() ? candidates : load_points(a.queries, a.no_normalize);
  check_model_dim(model, candidates.cols(), "candidate");
  check_model_dim(model, queries.cols(), "query");
  if (a.query_index < 0 || a.query_index >= queries.rows()) {
    throw DomainError("query index " + std::to_string(a.query_index) + " out of range for " +
                      std::to_string(queries.rows()) + " queries");
  }
  if (a.top_k < 1) {
    throw DomainError("top-k must be >= 1");
  }
  const Matrix q = queries.row(a.query_index);
  Vector scores;
  if (a.direction == "t2i") {
    const Encoded enc = encode(model, q, candidates);
    scores = score_rows(model, enc, 0, 1).row(0).transpose();
  } else if (a.direction == "i2t") {
    const Encoded enc = encode(model, candidates, q);
    scores = score_rows(model, enc, 0, candidates.rows()).col(0);
  } else {
    throw DomainError("direction must be t2i or i2t, got '" + a.direction + "'");
  }
  const Ranking r = rank_scores(a.query_index, scores);
  out << "rank\tindex\tscore\n";
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(a.top_k), r.ordered.size());
  for (std::size_t i = 0; i < k; ++i) {
    out << i + 1 << '\t' << r.ordered[i].index << '\t' << r.ordered[i].score << '\n';
  }
  return kOk;
}

int run_classify(const ClassifyArgs& a, std::ostream& out) {
  const Model model = load_checkpoint(a.model);
  const Matrix images = load_points(a.image_emb, a.no_normalize);
  const Matrix classes = load_points(a.class_emb, a.no_normalize);
  check_model_dim(model, images.cols(), "image");
  check_model_dim(model, classes.cols(), "class");
  RejectOptions opt;
  opt.rule = reject_rule_from_string(a.rule);
  opt.dummy_index = a.dummy_index;
  opt.threshold = a.threshold;
  opt.margin = a.margin;
  const Encoded enc = encode(model, classes, images);
  const Matrix s = score_rows(model, enc, 0, classes.rows());
  out << "image\tprediction\tbest_score\n";
  for (Eigen::Index i = 0; i < images.rows(); ++i) {
    const ClassifyDecision d = classify_scores(s.col(i), opt);
    out << i << '\t' << (d.rejected() ? std::string("REJECT") : std::to_string(d.predicted))
        << '\t' << d.scores.maxCoeff() << '\n';
  }
  return kOk;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Probabilistic adapters for frozen vision-language embeddings"};
  app.require_subcommand(1);
  std::string log_level = "warn";
  app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off")
      ->capture_default_str();

  GenSynthArgs gs;
  auto* gen = app.add_subcommand("gen-synth", "Generate a synthetic hierarchical dataset");
  gen->add_option("--out", gs.out, "Output directory")->required();
  gen->add_option("--objects", gs.config.n_objects, "Training objects")->capture_default_str();
  gen->add_option("--heldout", gs.config.heldout_objects, "Held-out objects")
      ->capture_default_str();
  gen->add_option("--captions-per-object", gs.config.captions_per_object)->capture_default_str();
  gen->add_option("--levels", gs.config.levels)->capture_default_str();
  gen->add_option("--dim", gs.config.dim)->capture_default_str();
  gen->add_option("--kappa-image", gs.config.kappa_image)->capture_default_str();
  gen->add_option("--seed", gs.config.seed)->capture_default_str();
  gen->add_option("--kappa-text", gs.kappa_text,
                  "Text concentration per level, most general first (comma separated)")
      ->delimiter(',');

  TrainArgs ta;
  auto* tr = app.add_subcommand("train", "Train an adapter");
  tr->add_option("--text-emb", ta.text_emb)->required();
  tr->add_option("--image-emb", ta.image_emb)->required();
  tr->add_option("--pairs", ta.pairs)->required();
  tr->add_option("--out", ta.out, "Checkpoint path")->required();
  tr->add_option("--dist", ta.dist, "vmf|ps|gauss|det")->capture_default_str();
  tr->add_option("--variant", ta.variant, "asym-text|asym-image|sym")->capture_default_str();
  tr->add_option("--loss", ta.loss, "infonce|siglip")->capture_default_str();
  tr->add_option("--epochs", ta.train.epochs)->capture_default_str();
  tr->add_option("--batch-size", ta.train.batch_size)->capture_default_str();
  tr->add_option("--lr", ta.train.lr0)->capture_default_str();
  tr->add_option("--lr-min", ta.train.lr_min)->capture_default_str();
  tr->add_option("--momentum", ta.train.momentum)->capture_default_str();
  tr->add_option("--seed", ta.train.seed)->capture_default_str();
  tr->add_option("--hidden", ta.hidden, "Hidden width")->capture_default_str();
  tr->add_flag("--no-normalize", ta.no_normalize, "Keep raw embedding norms");

  EvalArgs ea;
  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint");
  ev->add_option("--model", ea.model)->required();
  ev->add_option("--text-emb", ea.text_emb)->required();
  ev->add_option("--image-emb", ea.image_emb)->required();
  ev->add_option("--pairs", ea.pairs)->required();
  ev->add_option("--report", ea.report, "Output JSON")->required();
  ev->add_option("--bins", ea.bins)->capture_default_str();
  ev->add_flag("--group-stats", ea.group_stats, "Add per-level/token/group statistics");
  ev->add_flag("--no-normalize", ea.no_normalize);

  RetrieveArgs ra;
  auto* re = app.add_subcommand("retrieve", "Rank candidates for one query");
  re->add_option("--model", ra.model)->required();
  re->add_option("--direction", ra.direction, "t2i|i2t")->capture_default_str();
  re->add_option("--embeddings", ra.embeddings, "Candidate embeddings")->required();
  re->add_option("--queries", ra.queries, "Query embeddings (default: --embeddings)");
  re->add_option("--query-index", ra.query_index)->capture_default_str();
  re->add_option("--top-k", ra.top_k)->capture_default_str();
  re->add_flag("--no-normalize", ra.no_normalize);

  ClassifyArgs ca;
  auto* cl = app.add_subcommand("classify", "Zero-shot classification with rejection");
  cl->add_option("--model", ca.model)->required();
  cl->add_option("--image-emb", ca.image_emb)->required();
  cl->add_option("--class-emb", ca.class_emb, "One text embedding per class")->required();
  cl->add_option("--rule", ca.rule, "dummy|threshold|margin|none")->capture_default_str();
  cl->add_option("--dummy-index", ca.dummy_index);
  cl->add_option("--threshold", ca.threshold);
  cl->add_option("--margin", ca.margin);
  cl->add_flag("--no-normalize", ca.no_normalize);

  auto* st = app.add_subcommand("selftest", "Run the special-function oracle checks");

  std::vector<const char*> argv;
  for (const auto& s : args) argv.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return kOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kValidation;
  }

  auto logger = spdlog::get("probemb");
  if (!logger) {
    logger = spdlog::stderr_color_mt("probemb");
  }
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (*gen) return run_gen_synth(gs, out);
    if (*tr) return run_train(ta, out);
    if (*ev) return run_eval(ea, out);
    if (*re) return run_retrieve(ra, out);
    if (*cl) return run_classify(ca, out);
    if (*st) return run_selftest(out) ? kOk : kValidation;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kIo;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  }
  return kValidation;
}

int cli_main(int argc, char** argv) {
  return cli_main(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}

}  // namespace probemb::cli
