#include "pgnn/models.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include "json.hpp"

#include "pgnn/errors.hpp"

namespace pgnn {

using nn::ConvGeometry;
using nn::Mode;
using nn::Shape;
using nn::Tensor;

std::string to_string(RegressorVariant v) {
  return v == RegressorVariant::resnet18 ? "resnet18" : "resnet-small";
}

RegressorVariant parse_variant(const std::string& name) {
  if (name == "resnet18") return RegressorVariant::resnet18;
  if (name == "resnet-small") return RegressorVariant::resnet_small;
  throw ParameterError("unknown regressor variant '" + name + "' (expected resnet18 or resnet-small)");
}

std::size_t inverse_net_conv_parameter_count(const InverseNetConfig& c) {
  const std::size_t k2 = static_cast<std::size_t>(c.kernel) * c.kernel;
  std::size_t total = 0;
  int cin = c.in_channels;
  for (int w : c.widths) {
    total += static_cast<std::size_t>(cin) * w * k2 + w;
    cin = w;
  }
  total += static_cast<std::size_t>(cin) * c.out_channels * k2 + c.out_channels;
  return total;
}

// InverseNet -----------------------------------------------------------------

template <typename T>
InverseNet<T>::InverseNet(const InverseNetConfig& config, std::uint64_t seed)
    : config_(config), seed_(seed), rng_(mix_seed(seed, 1)) {
  if (config.kernel % 2 == 0) throw ParameterError("InverseNet kernel must be odd to preserve size");
  const ConvGeometry same{1, config.kernel / 2};
  int cin = config.in_channels;
  for (std::size_t i = 0; i < config.widths.size(); ++i) {
    const std::string idx = std::to_string(i + 1);
    const int w = config.widths[i];
    stages_.push_back(Stage{nn::Conv2dLayer<T>(store_, "conv" + idx, cin, w, config.kernel, same, true), {},
                            nn::BatchNorm2dLayer<T>(store_, "bn" + idx, w), nn::DropoutLayer<T>(config.dropout)});
    cin = w;
  }
  head_ = nn::ConvTranspose2dLayer<T>(store_, "head", cin, config.out_channels, config.kernel, same, true);

  Rng init_rng(mix_seed(seed, 0));
  for (auto& s : stages_) s.conv.init(init_rng);
  head_.init(init_rng);
}

template <typename T>
Tensor<T> InverseNet<T>::forward(const Tensor<T>& z, Mode mode) {
  if (z.shape().c != config_.in_channels) {
    throw DimensionError("InverseNet expects " + std::to_string(config_.in_channels) + " channels, got " +
                         z.shape().str());
  }
  const bool keep = mode == Mode::train;
  Tensor<T> h = z;
  for (auto& s : stages_) {
    h = s.conv.forward(h, keep);
    h = s.act.forward(h);
    h = s.norm.forward(h, mode);
    h = s.drop.forward(h, mode, rng_);
  }
  return head_.forward(h, keep);
}

template <typename T>
Tensor<T> InverseNet<T>::backward(const Tensor<T>& grad_out, bool need_input_grad) {
  Tensor<T> g = head_.backward(grad_out, true);
  for (std::size_t i = stages_.size(); i-- > 0;) {
    auto& s = stages_[i];
    g = s.drop.backward(g);
    g = s.norm.backward(g);
    g = s.act.backward(g);
    g = s.conv.backward(g, i > 0 || need_input_grad);
  }
  return g;
}

// BasicBlock -----------------------------------------------------------------

template <typename T>
BasicBlock<T>::BasicBlock(nn::ParamStore<T>& store, const std::string& name, int cin, int cout, int stride)
    : conv1_(store, name + ".conv1", cin, cout, 3, ConvGeometry{stride, 1}, false),
      bn1_(store, name + ".bn1", cout),
      conv2_(store, name + ".conv2", cout, cout, 3, ConvGeometry{1, 1}, false),
      bn2_(store, name + ".bn2", cout),
      projection_(stride != 1 || cin != cout) {
  if (projection_) {
    shortcut_conv_ = nn::Conv2dLayer<T>(store, name + ".shortcut", cin, cout, 1, ConvGeometry{stride, 0}, false);
    shortcut_bn_ = nn::BatchNorm2dLayer<T>(store, name + ".shortcut_bn", cout);
  }
}

template <typename T>
void BasicBlock<T>::init(Rng& rng) {
  conv1_.init(rng);
  conv2_.init(rng);
  if (projection_) shortcut_conv_.init(rng);
}

template <typename T>
Tensor<T> BasicBlock<T>::forward(const Tensor<T>& x, Mode mode) {
  const bool keep = mode == Mode::train;
  Tensor<T> h = relu1_.forward(bn1_.forward(conv1_.forward(x, keep), mode));
  h = bn2_.forward(conv2_.forward(h, keep), mode);
  Tensor<T> skip = projection_ ? shortcut_bn_.forward(shortcut_conv_.forward(x, keep), mode) : x;
  return relu_out_.forward(nn::add(h, skip));
}

template <typename T>
Tensor<T> BasicBlock<T>::backward(const Tensor<T>& grad_out) {
  const Tensor<T> g = relu_out_.backward(grad_out);
  Tensor<T> main = conv2_.backward(bn2_.backward(g));
  main = conv1_.backward(bn1_.backward(relu1_.backward(main)));
  if (projection_) return nn::add(main, shortcut_conv_.backward(shortcut_bn_.backward(g)));
  return nn::add(main, g);
}

// RegressorNet ---------------------------------------------------------------

template <typename T>
RegressorNet<T>::RegressorNet(const RegressorConfig& config, std::uint64_t seed) : config_(config), seed_(seed) {
  if (config.pretrained) throw ParameterError("pretrained backbones are not available; train from scratch");

  struct StagePlan {
    int width;
    int stride;
  };
  std::vector<StagePlan> plan;
  int stem_width = 0;
  if (config.variant == RegressorVariant::resnet18) {
    stem_width = 64;
    stem_conv_ = nn::Conv2dLayer<T>(store_, "stem", config.in_channels, stem_width, 7, ConvGeometry{2, 3}, false);
    stem_pool_ = true;
    plan = {{64, 1}, {128, 2}, {256, 2}, {512, 2}};
  } else {
    stem_width = 16;
    stem_conv_ = nn::Conv2dLayer<T>(store_, "stem", config.in_channels, stem_width, 3, ConvGeometry{1, 1}, false);
    plan = {{16, 1}, {32, 2}, {64, 2}};
  }
  stem_bn_ = nn::BatchNorm2dLayer<T>(store_, "stem_bn", stem_width);

  int cin = stem_width;
  for (std::size_t s = 0; s < plan.size(); ++s) {
    for (int b = 0; b < 2; ++b) {
      const std::string name = "layer" + std::to_string(s + 1) + "." + std::to_string(b);
      blocks_.emplace_back(store_, name, cin, plan[s].width, b == 0 ? plan[s].stride : 1);
      cin = plan[s].width;
    }
  }
  fc1_ = nn::LinearLayer<T>(store_, "fusion.fc1", config.feature_width(), config.fusion_width());
  fc2_ = nn::LinearLayer<T>(store_, "fusion.fc2", config.fusion_width(), 1);
  shift_ = &store_.add_buffer("target.shift", Shape{1, 1, 1, 1}, T(0));
  scale_ = &store_.add_buffer("target.scale", Shape{1, 1, 1, 1}, T(1));

  Rng init_rng(mix_seed(seed, 0));
  stem_conv_.init(init_rng);
  for (auto& b : blocks_) b.init(init_rng);
  fc1_.init(init_rng);
  fc2_.init(init_rng, true);
  // The output layer starts at zero: an untrained regressor predicts the
  // training mean, and the first updates fit the fusion block before the
  // backbone receives gradient.
  store_.at("fusion.fc2.weight").value.fill(T(0));
}

template <typename T>
Tensor<T> RegressorNet<T>::features(const Tensor<T>& x, Mode mode) {
  if (x.shape().c != config_.in_channels) {
    throw DimensionError("regressor expects " + std::to_string(config_.in_channels) + " channels, got " +
                         x.shape().str());
  }
  Tensor<T> h = stem_relu_.forward(stem_bn_.forward(stem_conv_.forward(x, mode == Mode::train), mode));
  if (stem_pool_) h = pool_.forward(h);
  for (auto& b : blocks_) h = b.forward(h, mode);
  return gap_.forward(h);
}

template <typename T>
Tensor<T> RegressorNet<T>::forward_raw(const Tensor<T>& x, Mode mode) {
  return fc2_.forward(fc_relu_.forward(fc1_.forward(features(x, mode))));
}

template <typename T>
std::vector<double> RegressorNet<T>::predict(const Tensor<T>& x, Mode mode) {
  const Tensor<T> raw = forward_raw(x, mode);
  std::vector<double> out(raw.size());
  const double shift = target_shift();
  const double scale = target_scale();
  for (std::size_t i = 0; i < raw.size(); ++i) out[i] = static_cast<double>(raw[i]) * scale + shift;
  return out;
}

template <typename T>
Tensor<T> RegressorNet<T>::backward(const Tensor<T>& grad_out, bool need_input_grad) {
  Tensor<T> g = fc1_.backward(fc_relu_.backward(fc2_.backward(grad_out)));
  g = gap_.backward(g);
  for (std::size_t i = blocks_.size(); i-- > 0;) g = blocks_[i].backward(g);
  if (stem_pool_) g = pool_.backward(g);
  return stem_conv_.backward(stem_bn_.backward(stem_relu_.backward(g)), need_input_grad);
}

template <typename T>
void RegressorNet<T>::set_target_scaling(double shift, double scale) {
  if (!(scale > 0.0)) throw ParameterError("target scale must be positive");
  shift_->value[0] = T(shift);
  scale_->value[0] = T(scale);
}

template <typename T>
double RegressorNet<T>::target_shift() const {
  return shift_->value[0];
}

template <typename T>
double RegressorNet<T>::target_scale() const {
  return scale_->value[0];
}

template class InverseNet<float>;
template class InverseNet<double>;
template class BasicBlock<float>;
template class BasicBlock<double>;
template class RegressorNet<float>;
template class RegressorNet<double>;

// Serialization --------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'P', 'G', 'N', 'N'};

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path) : out_(path, std::ios::binary), path_(path) {
    if (!out_) throw IoError("cannot open " + path.string() + " for writing");
  }
  void bytes(const void* p, std::size_t n) { out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }
  void u32(std::uint32_t v) {
    if constexpr (std::endian::native == std::endian::big) v = __builtin_bswap32(v);
    bytes(&v, 4);
  }
  void f32(float f) { u32(std::bit_cast<std::uint32_t>(f)); }
  void finish() {
    out_.flush();
    if (!out_) throw IoError("failed writing " + path_.string());
  }

 private:
  std::ofstream out_;
  std::filesystem::path path_;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path) : in_(path, std::ios::binary), path_(path) {
    if (!in_) throw MissingFileError("model", path.string());
  }
  void bytes(void* p, std::size_t n) {
    if (!in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n))) {
      throw FormatError("weight file " + path_.string() + " is truncated");
    }
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    bytes(&v, 4);
    if constexpr (std::endian::native == std::endian::big) v = __builtin_bswap32(v);
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string str(std::uint32_t n) {
    if (n > (1u << 24)) throw FormatError("weight file " + path_.string() + " has an implausible string length");
    std::string s(n, '\0');
    bytes(s.data(), n);
    return s;
  }
  bool at_end() { return in_.peek() == std::char_traits<char>::eof(); }

 private:
  std::ifstream in_;
  std::filesystem::path path_;
};

nlohmann::json config_blob(const InverseNet<float>& m) {
  const auto& c = m.config();
  return {{"kind", "inverse"},
          {"in_channels", c.in_channels},
          {"widths", c.widths},
          {"out_channels", c.out_channels},
          {"kernel", c.kernel},
          {"dropout", c.dropout},
          {"seed", m.seed()}};
}

nlohmann::json config_blob(const RegressorNet<float>& m) {
  const auto& c = m.config();
  return {{"kind", "regressor"},
          {"variant", to_string(c.variant)},
          {"in_channels", c.in_channels},
          {"pretrained", c.pretrained},
          {"seed", m.seed()}};
}

void write_file(const nlohmann::json& blob, const nn::ParamStore<float>& store, const std::filesystem::path& path) {
  Writer w(path);
  w.bytes(kMagic, 4);
  w.u32(kWeightFileVersion);
  const std::string text = blob.dump();
  w.u32(static_cast<std::uint32_t>(text.size()));
  w.bytes(text.data(), text.size());
  w.u32(static_cast<std::uint32_t>(store.size()));
  for (std::size_t i = 0; i < store.size(); ++i) {
    const auto& p = store[i];
    w.u32(static_cast<std::uint32_t>(p.name.size()));
    w.bytes(p.name.data(), p.name.size());
    const Shape s = p.value.shape();
    w.u32(4);
    for (int d : {s.n, s.c, s.h, s.w}) w.u32(static_cast<std::uint32_t>(d));
    for (float v : p.value.span()) w.f32(v);
  }
  w.finish();
}

void read_tensors(Reader& r, nn::ParamStore<float>& store, const std::filesystem::path& path) {
  const std::uint32_t count = r.u32();
  if (count != store.size()) {
    throw DimensionError("weight file " + path.string() + " holds " + std::to_string(count) +
                         " tensors, config expects " + std::to_string(store.size()));
  }
  for (std::uint32_t t = 0; t < count; ++t) {
    const std::string name = r.str(r.u32());
    auto* p = store.find(name);
    if (!p) throw DimensionError("weight file " + path.string() + " has unexpected tensor " + name);
    const std::uint32_t ndim = r.u32();
    if (ndim == 0 || ndim > 4) throw FormatError("tensor " + name + " has unsupported rank");
    std::vector<int> dims(4, 1);
    for (std::uint32_t d = 0; d < ndim; ++d) dims[4 - ndim + d] = static_cast<int>(r.u32());
    const Shape s{dims[0], dims[1], dims[2], dims[3]};
    if (s != p->value.shape()) {
      throw DimensionError("tensor " + name + " has shape " + s.str() + ", config expects " +
                           p->value.shape().str());
    }
    for (auto& v : p->value.span()) v = r.f32();
  }
  if (!r.at_end()) throw FormatError("weight file " + path.string() + " has trailing bytes");
}

template <typename J, typename V>
V field_or(const J& j, const char* key, V fallback) {
  return j.contains(key) ? j.at(key).template get<V>() : fallback;
}

}  // namespace

void save_model(const InverseNet<float>& model, const std::filesystem::path& path) {
  write_file(config_blob(model), model.params(), path);
}

void save_model(const RegressorNet<float>& model, const std::filesystem::path& path) {
  write_file(config_blob(model), model.params(), path);
}

ModelBundle load_model(const std::filesystem::path& path) {
  Reader r(path);
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw FormatError(path.string() + " is not a PGNN weight file");
  const std::uint32_t version = r.u32();
  if (version != kWeightFileVersion) {
    throw FormatError("unsupported weight file version " + std::to_string(version));
  }
  nlohmann::json blob;
  try {
    blob = nlohmann::json::parse(r.str(r.u32()));
    const std::string kind = blob.at("kind").get<std::string>();
    const auto seed = blob.at("seed").get<std::uint64_t>();
    if (kind == "inverse") {
      InverseNetConfig c;
      c.in_channels = field_or(blob, "in_channels", c.in_channels);
      c.widths = field_or(blob, "widths", c.widths);
      c.out_channels = field_or(blob, "out_channels", c.out_channels);
      c.kernel = field_or(blob, "kernel", c.kernel);
      c.dropout = field_or(blob, "dropout", c.dropout);
      InverseNet<float> model(c, seed);
      read_tensors(r, model.params(), path);
      return model;
    }
    if (kind == "regressor") {
      RegressorConfig c;
      c.variant = parse_variant(blob.at("variant").get<std::string>());
      c.in_channels = field_or(blob, "in_channels", c.in_channels);
      c.pretrained = field_or(blob, "pretrained", c.pretrained);
      RegressorNet<float> model(c, seed);
      read_tensors(r, model.params(), path);
      return model;
    }
    throw FormatError("weight file " + path.string() + " has unknown model kind " + kind);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("weight file " + path.string() + " has a malformed config blob: " + e.what());
  }
}

InverseNet<float> load_inverse_net(const std::filesystem::path& path) {
  auto bundle = load_model(path);
  if (auto* m = std::get_if<InverseNet<float>>(&bundle)) return std::move(*m);
  throw FormatError(path.string() + " does not hold an inverse network");
}

RegressorNet<float> load_regressor(const std::filesystem::path& path) {
  auto bundle = load_model(path);
  if (auto* m = std::get_if<RegressorNet<float>>(&bundle)) return std::move(*m);
  throw FormatError(path.string() + " does not hold a regressor");
}

}  // namespace pgnn
