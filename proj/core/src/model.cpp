#include "dynkt/model.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "dynkt/ops.hpp"

namespace dynkt {

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string join(const std::vector<std::size_t>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(values[i]);
  }
  return out;
}

std::vector<std::size_t> parse_list(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stoul(item));
  }
  return out;
}

const std::string& field(const std::map<std::string, std::string>& fields, const std::string& key) {
  const auto it = fields.find(key);
  if (it == fields.end()) throw FormatError("model config is missing '" + key + "'");
  return it->second;
}

void invalid(const std::string& field_name, const std::string& why) {
  throw std::invalid_argument("model." + field_name + ": " + why);
}

}  // namespace

std::string to_string(Variant v) { return v == Variant::BiGRU ? "bigru" : "tdnn"; }

Variant parse_variant(const std::string& text) {
  std::string lower = text;
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "bigru") return Variant::BiGRU;
  if (lower == "tdnn") return Variant::TDNN;
  throw std::invalid_argument("model.variant: expected 'bigru' or 'tdnn', got '" + text + "'");
}

ModelConfig ModelConfig::defaults(Variant variant, std::size_t skill_vocab_size) {
  ModelConfig c;
  c.variant = variant;
  c.skill_vocab_size = skill_vocab_size;
  if (variant == Variant::TDNN) {
    c.conv_filters = 50;
    c.conv_kernel = 5;
    c.dense_units = {20, 15, 10, 5};
  }
  return c;
}

void ModelConfig::validate() const {
  if (window < 2) invalid("window", "must be at least 2");
  if (skill_vocab_size < 1) invalid("skill_vocab_size", "must be at least 1");
  if (response_vocab_size != 3) invalid("response_vocab_size", "must be 3 (pad, wrong, correct)");
  if (skill_dim < 1) invalid("skill_dim", "must be positive");
  if (response_dim != skill_dim) invalid("response_dim", "must equal skill_dim");
  if (conv_filters < 1) invalid("conv_filters", "must be positive");
  if (conv_kernel < 1 || conv_kernel % 2 == 0) invalid("conv_kernel", "must be a positive odd number");
  if (variant == Variant::BiGRU && gru_units < 1) invalid("gru_units", "must be positive");
  if (dense_units.empty()) invalid("dense_units", "needs at least one hidden layer");
  for (std::size_t u : dense_units) {
    if (u < 1) invalid("dense_units", "widths must be positive");
  }
  if (variant == Variant::TDNN) {
    for (std::size_t i = 1; i < dense_units.size(); ++i) {
      if (dense_units[i] >= dense_units[i - 1]) invalid("dense_units", "TDNN widths must be strictly decreasing");
    }
  }
  if (!(spatial_dropout >= 0.0 && spatial_dropout < 1.0)) invalid("spatial_dropout", "must lie in [0, 1)");
  if (!(gaussian_dropout >= 0.0 && gaussian_dropout < 1.0)) invalid("gaussian_dropout", "must lie in [0, 1)");
}

std::size_t ModelConfig::state_dim() const {
  return variant == Variant::BiGRU ? 2 * gru_units : window * 2 * conv_filters;
}

std::map<std::string, std::string> ModelConfig::to_fields() const {
  return {
      {"variant", to_string(variant)},
      {"window", std::to_string(window)},
      {"skill_vocab_size", std::to_string(skill_vocab_size)},
      {"response_vocab_size", std::to_string(response_vocab_size)},
      {"skill_dim", std::to_string(skill_dim)},
      {"response_dim", std::to_string(response_dim)},
      {"conv_filters", std::to_string(conv_filters)},
      {"conv_kernel", std::to_string(conv_kernel)},
      {"gru_units", std::to_string(gru_units)},
      {"dense_units", join(dense_units)},
      {"spatial_dropout", format_double(spatial_dropout)},
      {"gaussian_dropout", format_double(gaussian_dropout)},
      {"seed", std::to_string(seed)},
  };
}

ModelConfig ModelConfig::from_fields(const std::map<std::string, std::string>& fields) {
  ModelConfig c;
  c.variant = parse_variant(field(fields, "variant"));
  c.window = std::stoul(field(fields, "window"));
  c.skill_vocab_size = std::stoul(field(fields, "skill_vocab_size"));
  c.response_vocab_size = std::stoul(field(fields, "response_vocab_size"));
  c.skill_dim = std::stoul(field(fields, "skill_dim"));
  c.response_dim = std::stoul(field(fields, "response_dim"));
  c.conv_filters = std::stoul(field(fields, "conv_filters"));
  c.conv_kernel = std::stoul(field(fields, "conv_kernel"));
  c.gru_units = std::stoul(field(fields, "gru_units"));
  c.dense_units = parse_list(field(fields, "dense_units"));
  c.spatial_dropout = std::stod(field(fields, "spatial_dropout"));
  c.gaussian_dropout = std::stod(field(fields, "gaussian_dropout"));
  c.seed = std::stoull(field(fields, "seed"));
  c.validate();
  return c;
}

TracingModel::TracingModel(const ModelConfig& config) : config_(config), rng_(config.seed) {
  config_.validate();
  skill_embedding_ = Embedding(config_.skill_vocab_size + 1, config_.skill_dim, rng_);
  response_embedding_ = Embedding(config_.response_vocab_size, config_.response_dim, rng_);
  skill_conv_ = Conv1D(config_.skill_dim, config_.conv_filters, config_.conv_kernel, rng_);
  response_conv_ = Conv1D(config_.response_dim, config_.conv_filters, config_.conv_kernel, rng_);
  skill_norm_ = BatchNorm1D(config_.conv_filters);
  response_norm_ = BatchNorm1D(config_.conv_filters);
  if (config_.variant == Variant::BiGRU) {
    gru_forward_ = GruParams::create(2 * config_.conv_filters, config_.gru_units, rng_);
    gru_backward_ = GruParams::create(2 * config_.conv_filters, config_.gru_units, rng_);
  }
  std::size_t width = config_.state_dim();
  for (std::size_t units : config_.dense_units) {
    head_.emplace_back(width, units, Activation::Relu, rng_);
    width = units;
  }
  head_.emplace_back(width, 1, Activation::Sigmoid, rng_);
}

Tensor TracingModel::encode_branch(const TokenBatch& ids, Embedding& embedding, Conv1D& conv, BatchNorm1D& norm,
                                   Mode mode) {
  Tensor x = embedding.forward(ids);
  x = spatial_dropout1d(x, config_.spatial_dropout, mode, rng_);
  x = conv.forward(x);
  x = norm.forward(x, mode);
  return ops::relu(x);
}

EncodedBranches TracingModel::encode(const TokenBatch& skills, const TokenBatch& responses, Mode mode) {
  if (skills.batch != responses.batch || skills.time != responses.time) {
    throw ShapeError("encode: skill ids [" + std::to_string(skills.batch) + ", " + std::to_string(skills.time) +
                     "] and response ids [" + std::to_string(responses.batch) + ", " +
                     std::to_string(responses.time) + "] are not aligned");
  }
  EncodedBranches out;
  out.skills = encode_branch(skills, skill_embedding_, skill_conv_, skill_norm_, mode);
  out.responses = encode_branch(responses, response_embedding_, response_conv_, response_norm_, mode);
  return out;
}

KnowledgeState TracingModel::trace(const EncodedBranches& branches, Mode mode) {
  const Shape& s = branches.skills.shape();
  const Shape& r = branches.responses.shape();
  if (s.size() != 3 || r.size() != 3 || s[0] != r[0] || s[1] != r[1]) {
    throw ShapeError("trace: branch shapes " + shape_to_string(s) + " and " + shape_to_string(r) +
                     " have misaligned time axes");
  }
  Tensor joined = ops::concat({branches.skills, branches.responses}, 2);
  if (config_.variant == Variant::BiGRU) {
    return {bigru(joined, gru_forward_, gru_backward_, false).last};
  }
  if (s[1] != config_.window) {
    throw ShapeError("trace: TDNN expects windows of length " + std::to_string(config_.window) + ", got " +
                     std::to_string(s[1]));
  }
  Tensor flat = ops::reshape(joined, {s[0], s[1] * (s[2] + r[2])});
  return {gaussian_dropout(flat, config_.gaussian_dropout, mode, rng_)};
}

Tensor TracingModel::classify(const KnowledgeState& state) const {
  Tensor x = state.v;
  for (const auto& layer : head_) x = layer.forward(x);
  return ops::reshape(x, {x.dim(0)});
}

Tensor TracingModel::predict(const TokenBatch& skills, const TokenBatch& responses, Mode mode) {
  return classify(trace(encode(skills, responses, mode), mode));
}

std::vector<double> TracingModel::predict_windows(std::span<const data::SequenceWindow> windows,
                                                  std::size_t batch_size) {
  if (batch_size == 0) throw std::invalid_argument("predict_windows: batch size must be positive");
  NoGradScope no_grad;
  std::vector<double> out;
  out.reserve(windows.size());
  for (std::size_t begin = 0; begin < windows.size(); begin += batch_size) {
    const std::size_t n = std::min(batch_size, windows.size() - begin);
    const auto batch = data::make_batch(windows.subspan(begin, n));
    const Tensor p = predict(batch.skills, batch.responses, Mode::Inference);
    out.insert(out.end(), p.values().begin(), p.values().end());
  }
  return out;
}

std::vector<NamedTensor> TracingModel::parameters() const {
  std::vector<NamedTensor> out;
  skill_embedding_.collect("skill_embedding", out);
  response_embedding_.collect("response_embedding", out);
  skill_conv_.collect("skill_conv", out);
  response_conv_.collect("response_conv", out);
  skill_norm_.collect("skill_norm", out);
  response_norm_.collect("response_norm", out);
  if (config_.variant == Variant::BiGRU) {
    gru_forward_.collect("gru_forward", out);
    gru_backward_.collect("gru_backward", out);
  }
  for (std::size_t i = 0; i < head_.size(); ++i) head_[i].collect("dense" + std::to_string(i), out);
  return out;
}

std::vector<NamedTensor> TracingModel::buffers() const {
  std::vector<NamedTensor> out;
  skill_norm_.collect_buffers("skill_norm", out);
  response_norm_.collect_buffers("response_norm", out);
  return out;
}

std::vector<NamedArray> TracingModel::state() const {
  std::vector<NamedArray> out;
  auto add = [&](const std::vector<NamedTensor>& tensors) {
    for (const auto& t : tensors) {
      out.push_back({t.name, t.tensor.shape(), {t.tensor.values().begin(), t.tensor.values().end()}});
    }
  };
  add(parameters());
  add(buffers());
  return out;
}

void TracingModel::load_state(const std::vector<NamedArray>& arrays) {
  std::map<std::string, const NamedArray*> by_name;
  for (const auto& a : arrays) by_name[a.name] = &a;
  auto load = [&](std::vector<NamedTensor> tensors) {
    for (auto& t : tensors) {
      const auto it = by_name.find(t.name);
      if (it == by_name.end()) throw FormatError("checkpoint is missing '" + t.name + "'");
      if (it->second->shape != t.tensor.shape()) {
        throw FormatError("checkpoint entry '" + t.name + "' has shape " + shape_to_string(it->second->shape) +
                          ", model expects " + shape_to_string(t.tensor.shape()));
      }
      std::copy(it->second->values.begin(), it->second->values.end(), t.tensor.mutable_values().begin());
    }
  };
  load(parameters());
  load(buffers());
}

void save_checkpoint(const std::filesystem::path& path, const TracingModel& model,
                     const std::map<std::string, std::string>& extra) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write checkpoint '" + path.string() + "'");
  out << "DYNKT-CHECKPOINT 1\n";
  for (const auto& [k, v] : model.config().to_fields()) out << k << " = " << v << '\n';
  for (const auto& [k, v] : extra) out << k << " = " << v << '\n';
  out << "end\n";
  const auto arrays = model.state();
  write_param_container(out, arrays);
}

TracingModel load_checkpoint(const std::filesystem::path& path, std::map<std::string, std::string>* header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line) || line != "DYNKT-CHECKPOINT 1") {
    throw FormatError("'" + path.string() + "' is not a checkpoint");
  }
  std::map<std::string, std::string> fields;
  bool closed = false;
  while (std::getline(in, line)) {
    if (line == "end") {
      closed = true;
      break;
    }
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) throw FormatError("checkpoint header line '" + line + "' is not 'key = value'");
    fields[line.substr(0, eq)] = line.substr(eq + 3);
  }
  if (!closed) throw FormatError("checkpoint header is not terminated");
  TracingModel model(ModelConfig::from_fields(fields));
  model.load_state(read_param_container(in));
  if (header != nullptr) *header = std::move(fields);
  return model;
}

}  // namespace dynkt
