// Command-line front end: synthetic data generation, training, evaluation,
// live streaming inference and checkpoint inspection.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dgm/checkpoint.hpp"
#include "dgm/dgm.hpp"

namespace {

using Real = float;

struct GenDataArgs {
  std::string out;
  std::string spec_file;
  std::uint64_t seed = 0;
  int train = 100;
  int test = 50;
  std::vector<std::string> classes;
  int objects = -1;
  int distractors = -1;
  int frames = -1;
  int feat_dim = -1;
  int identity_dim = -1;
  double noise = -1;
  int proposals = -1;
  int nodes = -1;
};

int run_gen_data(const GenDataArgs& args) {
  dgm::SyntheticTaskSpec spec;
  if (!args.spec_file.empty()) spec = dgm::parse_task_spec(dgm::read_text_file(args.spec_file));
  if (!args.classes.empty()) {
    spec.classes.clear();
    for (const auto& name : args.classes) spec.classes.push_back(dgm::parse_interaction(name));
  }
  if (args.objects >= 0) spec.objects = args.objects;
  if (args.distractors >= 0) spec.distractors = args.distractors;
  if (args.frames >= 0) spec.frames = args.frames;
  if (args.feat_dim >= 0) spec.feat_dim = args.feat_dim;
  if (args.identity_dim >= 0) spec.identity_dim = args.identity_dim;
  if (args.noise >= 0) spec.noise_sigma = args.noise;
  if (args.proposals >= 0) spec.proposals = args.proposals;
  if (args.nodes >= 0) spec.nodes = args.nodes;
  spec.validate();

  auto dataset = dgm::generate_interaction_dataset<Real>(spec, args.seed, args.train, args.test);
  dgm::write_dataset(args.out, dataset);
  dgm::write_text_file(std::filesystem::path(args.out) / "taskspec.txt",
                       dgm::serialize_task_spec(spec));
  std::cout << "wrote " << dataset.train.size() << " train and " << dataset.test.size()
            << " test streams to " << args.out << "\n";
  return 0;
}

struct TrainArgs {
  std::string data;
  std::string out;
  std::string variant = "visual";
  int proposals = 20;
  int nodes = 5;
  bool proposals_set = false;
  bool nodes_set = false;
  std::string preset;
  int rounds = 1;
  bool static_mode = false;
  int epochs = 3;
  int batch = 8;
  double lr = 0.00125;
  double momentum = 0.9;
  double weight_decay = 0.0001;
  double dropout = 0;
  std::uint64_t seed = 0;
  int lstm_hidden = 0;
  bool final_step_loss = false;
  std::string metrics_file;
};

dgm::ModelConfig model_config_for(const TrainArgs& args, const dgm::Dataset<Real>& dataset) {
  dgm::check(!dataset.train.empty(), "train: dataset has no train split");
  const auto& first = dataset.train.front();

  dgm::ModelConfig mc;
  mc.variant = dgm::parse_variant(args.variant);
  mc.feat_dim = first.feat_dim;
  mc.num_classes = first.num_classes;
  mc.proposals_per_frame = args.proposals;
  mc.nodes = args.nodes;
  mc.internal_rounds = args.rounds;
  mc.static_mode = args.static_mode;
  mc.dropout = args.dropout;

  // Precedence: built-in defaults < dataset task spec < preset < explicit flags.
  const auto spec_path = std::filesystem::path(args.data) / "taskspec.txt";
  if (std::filesystem::exists(spec_path)) {
    const auto spec = dgm::parse_task_spec(dgm::read_text_file(spec_path));
    mc.proposals_per_frame = spec.proposals;
    mc.nodes = spec.nodes;
  }
  if (args.preset == "activitynet") {
    mc.proposals_per_frame = 40;
    mc.nodes = 10;
  } else if (!args.preset.empty()) {
    throw dgm::ContractError("unknown preset: " + args.preset);
  }
  if (args.proposals_set) mc.proposals_per_frame = args.proposals;
  if (args.nodes_set) mc.nodes = args.nodes;

  if (mc.variant == dgm::ModelVariant::Baseline) {
    mc.lstm_hidden = args.lstm_hidden;
    if (mc.lstm_hidden == 0) {
      dgm::ModelConfig graph = mc;
      graph.variant = dgm::ModelVariant::Visual;
      graph.lstm_hidden = 0;
      mc.lstm_hidden = dgm::baseline_hidden_for_parity(graph);
    }
  }
  return mc;
}

int run_train(const TrainArgs& args) {
  const auto dataset = dgm::load_dataset<Real>(args.data);

  dgm::TrainConfig cfg;
  cfg.model = model_config_for(args, dataset);
  cfg.lr = args.lr;
  cfg.momentum = args.momentum;
  cfg.weight_decay = args.weight_decay;
  cfg.epochs = args.epochs;
  cfg.batch_size = args.batch;
  cfg.seed = args.seed;
  cfg.final_step_loss_only = args.final_step_loss;

  std::ofstream metrics;
  if (!args.metrics_file.empty()) {
    metrics.open(args.metrics_file, std::ios::trunc);
    if (!metrics) throw dgm::IoError("cannot open " + args.metrics_file);
  }
  auto result = dgm::train_model<Real>(dataset, cfg, metrics.is_open() ? &metrics : nullptr);
  dgm::save_checkpoint(result.model, args.out);

  std::cout << "trained " << dgm::variant_name(cfg.model.variant) << " model ("
            << result.model.parameter_count() << " parameters, "
            << result.metrics.loss_history.size() << " optimizer steps)\n";
  if (!result.metrics.loss_history.empty())
    std::cout << "first-batch loss " << dgm::format_real(result.metrics.loss_history.front())
              << ", last-batch loss " << dgm::format_real(result.metrics.loss_history.back())
              << "\n";
  std::cout << "checkpoint written to " << args.out << "\n";
  return 0;
}

struct EvalArgs {
  std::string model;
  std::string data;
  std::string split = "test";
  std::string variant;
  bool per_step = false;
  std::string metrics_file;
};

int run_eval(const EvalArgs& args) {
  dgm::Model<Real> model =
      args.variant.empty()
          ? dgm::load_checkpoint<Real>(args.model)
          : dgm::load_checkpoint<Real>(args.model, dgm::parse_variant(args.variant));
  const auto dataset = dgm::load_dataset<Real>(args.data);
  const auto& streams = args.split == "train" ? dataset.train : dataset.test;
  if (args.split != "train" && args.split != "test")
    throw dgm::ContractError("unknown split: " + args.split);

  const auto metrics = dgm::evaluate(model, streams);
  if (args.per_step)
    for (std::size_t t = 0; t < metrics.per_step_top1.size(); ++t)
      std::cout << "step " << (t + 1) << " top1 " << dgm::format_real(metrics.per_step_top1[t])
                << "\n";
  std::cout << "final top1 " << dgm::format_real(metrics.final_top1) << "\n";
  std::cout << "final top5 " << dgm::format_real(metrics.final_top5) << "\n";

  if (!args.metrics_file.empty()) {
    std::ofstream out(args.metrics_file, std::ios::trunc);
    if (!out) throw dgm::IoError("cannot open " + args.metrics_file);
    for (std::size_t t = 0; t < metrics.per_step_top1.size(); ++t)
      dgm::write_metric_record(out, static_cast<long>(t + 1), args.split, "top1",
                               metrics.per_step_top1[t]);
    dgm::write_metric_record(out, static_cast<long>(metrics.per_step_top1.size()), args.split,
                             "final_top1", metrics.final_top1);
    dgm::write_metric_record(out, static_cast<long>(metrics.per_step_top1.size()), args.split,
                             "final_top5", metrics.final_top5);
  }
  return 0;
}

struct StreamArgs {
  std::string model;
  std::string input = "-";
  std::string output = "-";
};

// True streaming: one frame line in, one prediction record out, flushed before
// the next read.
int run_stream(const StreamArgs& args) {
  auto model = dgm::load_checkpoint<Real>(args.model);
  if (model.config.variant == dgm::ModelVariant::Baseline)
    throw dgm::ContractError("stream: recurrent baseline checkpoints are not streamable");

  std::ifstream file_in;
  if (args.input != "-") {
    file_in.open(args.input);
    if (!file_in) throw dgm::IoError("cannot open " + args.input);
  }
  std::istream& in = args.input == "-" ? std::cin : file_in;
  std::ofstream file_out;
  if (args.output != "-") {
    file_out.open(args.output, std::ios::trunc);
    if (!file_out) throw dgm::IoError("cannot open " + args.output);
  }
  std::ostream& out = args.output == "-" ? std::cout : file_out;

  dgm::StreamingEngine<Real> engine(model);
  std::string line;
  std::size_t line_number = 0;
  bool saw_header = false;
  int last_index = 0;
  while (std::getline(in, line)) {
    ++line_number;
    const auto tokens = dgm::split_tokens(line);
    if (tokens.empty()) continue;
    if (!saw_header) {
      const auto header = dgm::parse_stream_header<Real>(tokens, line_number);
      if (header.feat_dim != model.config.feat_dim)
        throw dgm::ContractError("stream: feature dim " + std::to_string(header.feat_dim) +
                                 " does not match model (" +
                                 std::to_string(model.config.feat_dim) + ")");
      saw_header = true;
      continue;
    }
    const auto frame =
        dgm::parse_frame_record<Real>(tokens, model.config.feat_dim, last_index, line_number);
    last_index = frame.frame_index;
    const auto& logits = engine.step(frame);
    out << "frame " << frame.frame_index << " predicted "
        << dgm::PredictionTrace<Real>::argmax(logits) << " logits";
    for (int k = 0; k < logits.size(); ++k) out << ' ' << dgm::format_real(logits[k]);
    out << '\n' << std::flush;
  }
  if (!saw_header) throw dgm::ParseError(line_number, "no header record before end of input");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Streaming hidden-graph action recognition over region proposals"};
  app.require_subcommand(1);

  GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate a synthetic interaction dataset");
  gen_cmd->add_option("--out", gen.out, "Output dataset directory")->required();
  gen_cmd->add_option("--spec", gen.spec_file, "Task-spec file (key value lines)");
  gen_cmd->add_option("--seed", gen.seed, "Generator seed");
  gen_cmd->add_option("--train", gen.train, "Training stream count");
  gen_cmd->add_option("--test", gen.test, "Test stream count");
  gen_cmd->add_option("--classes", gen.classes, "Class subset (comma separated)")->delimiter(',');
  gen_cmd->add_option("--objects", gen.objects, "Tracked objects per scene (2-4)");
  gen_cmd->add_option("--distractors", gen.distractors, "Distractor proposals per frame");
  gen_cmd->add_option("--frames", gen.frames, "Frames per stream");
  gen_cmd->add_option("--feat-dim", gen.feat_dim, "Feature dimension");
  gen_cmd->add_option("--identity-dim", gen.identity_dim, "Identity embedding dimension");
  gen_cmd->add_option("--noise", gen.noise, "Feature noise sigma");
  gen_cmd->add_option("--proposals", gen.proposals, "Model-facing selection width to record");
  gen_cmd->add_option("--nodes", gen.nodes, "Model-facing graph size to record");

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train a model on a dataset directory");
  train_cmd->add_option("--data", train.data, "Dataset directory")->required();
  train_cmd->add_option("--out", train.out, "Checkpoint output path")->required();
  train_cmd->add_option("--variant", train.variant, "visual | location | baseline");
  auto* opt_proposals =
      train_cmd->add_option("--proposals", train.proposals, "Top-N proposals per frame");
  auto* opt_nodes = train_cmd->add_option("--nodes", train.nodes, "Hidden graph size M");
  train_cmd->add_option("--preset", train.preset, "Named profile (activitynet: N=40, M=10)");
  train_cmd->add_option("--rounds", train.rounds, "Internal update rounds per step");
  train_cmd->add_flag("--static", train.static_mode, "Train the clip-level fused head");
  train_cmd->add_option("--epochs", train.epochs, "Training epochs");
  train_cmd->add_option("--batch", train.batch, "Batch size");
  train_cmd->add_option("--lr", train.lr, "Learning rate");
  train_cmd->add_option("--momentum", train.momentum, "SGD momentum");
  train_cmd->add_option("--weight-decay", train.weight_decay, "L2 weight decay");
  train_cmd->add_option("--dropout", train.dropout, "Classifier hidden dropout");
  train_cmd->add_option("--seed", train.seed, "Initialization and batching seed");
  train_cmd->add_option("--lstm-hidden", train.lstm_hidden,
                        "Baseline hidden width (0 = parameter parity with the visual graph)");
  train_cmd->add_flag("--final-step-loss", train.final_step_loss,
                      "Supervise only the last step instead of every step");
  train_cmd->add_option("--metrics", train.metrics_file, "Write loss records to this file");

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset split");
  eval_cmd->add_option("--model", eval.model, "Checkpoint path")->required();
  eval_cmd->add_option("--data", eval.data, "Dataset directory")->required();
  eval_cmd->add_option("--split", eval.split, "test | train");
  eval_cmd->add_option("--variant", eval.variant, "Require the checkpoint to hold this variant");
  eval_cmd->add_flag("--per-step", eval.per_step, "Print the per-step accuracy table");
  eval_cmd->add_option("--metrics", eval.metrics_file, "Write accuracy records to this file");

  StreamArgs stream;
  auto* stream_cmd =
      app.add_subcommand("stream", "Streaming inference: one prediction per frame record");
  stream_cmd->add_option("--model", stream.model, "Checkpoint path")->required();
  stream_cmd->add_option("--input", stream.input, "Input file, or - for stdin");
  stream_cmd->add_option("--output", stream.output, "Output file, or - for stdout");

  std::string inspect_model;
  auto* inspect_cmd = app.add_subcommand("inspect", "Print a checkpoint's header");
  inspect_cmd->add_option("--model", inspect_model, "Checkpoint path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    train.proposals_set = opt_proposals->count() > 0;
    train.nodes_set = opt_nodes->count() > 0;
    if (gen_cmd->parsed()) return run_gen_data(gen);
    if (train_cmd->parsed()) return run_train(train);
    if (eval_cmd->parsed()) return run_eval(eval);
    if (stream_cmd->parsed()) return run_stream(stream);
    if (inspect_cmd->parsed()) {
      std::cout << dgm::inspect_checkpoint(inspect_model);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
