#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "advtex/errors.hpp"
#include "advtex/image.hpp"

namespace advtex {

struct ConvBlockSpec {
  int out_channels = 16;
  int stride = 2;

  bool operator==(const ConvBlockSpec&) const = default;
};

/// 3x3 convolution blocks (padding 1, ReLU), global average pool, linear head.
struct ClassifierSpec {
  int input_width = 128;
  int input_height = 128;
  int in_channels = 3;
  int n_classes = 10;
  std::vector<ConvBlockSpec> blocks{{16, 2}, {32, 2}, {64, 2}, {128, 2}};

  bool operator==(const ClassifierSpec&) const = default;

  static ClassifierSpec standard(int n_classes) {
    ClassifierSpec s;
    s.n_classes = n_classes;
    return s;
  }

  /// Stable textual form; its digest identifies the architecture in weight files.
  std::string canonical() const {
    std::string out = "advtex-cnn/1 input=" + std::to_string(input_width) + "x" +
                      std::to_string(input_height) + "x" + std::to_string(in_channels);
    for (const auto& b : blocks) {
      out += " conv3x3(" + std::to_string(b.out_channels) + ",s" + std::to_string(b.stride) + ")+relu";
    }
    out += " gap linear(" + std::to_string(n_classes) + ")";
    return out;
  }
};

struct ConvLayerShape {
  int in_w, in_h, in_c;
  int out_w, out_h, out_c;
  int stride;
  std::size_t weight_offset;  // (9 * in_c) x out_c, row-major
  std::size_t bias_offset;

  int patch() const { return 9 * in_c; }
  int positions() const { return out_w * out_h; }
};

struct ClassifierLayout {
  std::vector<ConvLayerShape> conv;
  std::size_t head_weight_offset = 0;  // n_classes x features, row-major
  std::size_t head_bias_offset = 0;
  int features = 0;
  std::size_t weight_count = 0;
};

inline ClassifierLayout make_layout(const ClassifierSpec& spec) {
  if (spec.n_classes < 2) fail(ErrorCode::InvalidArgument, "classifier needs at least 2 classes");
  if (spec.blocks.empty()) fail(ErrorCode::InvalidArgument, "classifier needs a convolution block");
  ClassifierLayout layout;
  int w = spec.input_width, h = spec.input_height, c = spec.in_channels;
  std::size_t offset = 0;
  for (const auto& b : spec.blocks) {
    if (b.stride < 1 || b.out_channels < 1) fail(ErrorCode::InvalidArgument, "invalid conv block");
    ConvLayerShape s{};
    s.in_w = w;
    s.in_h = h;
    s.in_c = c;
    s.stride = b.stride;
    s.out_w = (w - 1) / b.stride + 1;
    s.out_h = (h - 1) / b.stride + 1;
    s.out_c = b.out_channels;
    s.weight_offset = offset;
    offset += static_cast<std::size_t>(s.patch()) * s.out_c;
    s.bias_offset = offset;
    offset += s.out_c;
    layout.conv.push_back(s);
    w = s.out_w;
    h = s.out_h;
    c = s.out_c;
  }
  layout.features = c;
  layout.head_weight_offset = offset;
  offset += static_cast<std::size_t>(spec.n_classes) * c;
  layout.head_bias_offset = offset;
  offset += spec.n_classes;
  layout.weight_count = offset;
  return layout;
}

namespace detail {

/// Portable uniform in [0, 1) from the top 53 bits of a 64-bit engine.
inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double standard_normal(std::mt19937_64& rng) {
  const double u1 = 1.0 - uniform01(rng);  // (0, 1]
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

}  // namespace detail

template <typename T>
class ClassifierModel {
 public:
  using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using Vector = Eigen::Matrix<T, Eigen::Dynamic, 1>;

  /// Intermediate values of one forward pass, reused by backward().
  struct Activations {
    std::vector<Matrix> cols;  // im2col patches per layer
    std::vector<Matrix> act;   // post-ReLU outputs per layer, positions x channels
    Vector pooled;
    Vector logits;
  };

  explicit ClassifierModel(ClassifierSpec spec)
      : spec_(std::move(spec)), layout_(make_layout(spec_)), weights_(layout_.weight_count, T{0}) {}

  /// He-normal convolution weights, zero biases; deterministic in `seed`.
  static ClassifierModel random(ClassifierSpec spec, std::uint64_t seed) {
    ClassifierModel model(std::move(spec));
    std::mt19937_64 rng(seed);
    for (const auto& l : model.layout_.conv) {
      const double stddev = std::sqrt(2.0 / l.patch());
      const std::size_t n = static_cast<std::size_t>(l.patch()) * l.out_c;
      for (std::size_t i = 0; i < n; ++i) {
        model.weights_[l.weight_offset + i] = static_cast<T>(stddev * detail::standard_normal(rng));
      }
    }
    const double head_std = std::sqrt(1.0 / model.layout_.features);
    const std::size_t head_n = static_cast<std::size_t>(model.spec_.n_classes) * model.layout_.features;
    for (std::size_t i = 0; i < head_n; ++i) {
      model.weights_[model.layout_.head_weight_offset + i] =
          static_cast<T>(head_std * detail::standard_normal(rng));
    }
    return model;
  }

  const ClassifierSpec& spec() const noexcept { return spec_; }
  const ClassifierLayout& layout() const noexcept { return layout_; }
  int n_classes() const noexcept { return spec_.n_classes; }
  std::span<T> weights() noexcept { return weights_; }
  std::span<const T> weights() const noexcept { return weights_; }

  template <typename U>
  ClassifierModel<U> cast() const {
    ClassifierModel<U> out(spec_);
    std::transform(weights_.begin(), weights_.end(), out.weights().begin(),
                   [](T v) { return static_cast<U>(v); });
    return out;
  }

  void check_input(const Image<T>& image) const {
    if (image.width() != spec_.input_width || image.height() != spec_.input_height ||
        image.channels() != spec_.in_channels) {
      fail(ErrorCode::ResolutionMismatch,
           "classifier expects " + std::to_string(spec_.input_width) + "x" +
               std::to_string(spec_.input_height) + "x" + std::to_string(spec_.in_channels) +
               " input, got " + std::to_string(image.width()) + "x" + std::to_string(image.height()) +
               "x" + std::to_string(image.channels()));
    }
  }

  void forward(const Image<T>& image, Activations& acts) const {
    check_input(image);
    const std::size_t n_layers = layout_.conv.size();
    acts.cols.resize(n_layers);
    acts.act.resize(n_layers);
    const T* input = image.data().data();
    for (std::size_t li = 0; li < n_layers; ++li) {
      const ConvLayerShape& l = layout_.conv[li];
      Matrix& cols = acts.cols[li];
      cols.resize(l.positions(), l.patch());
      im2col(l, input, cols);
      const Eigen::Map<const Matrix> w(weights_.data() + l.weight_offset, l.patch(), l.out_c);
      const Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> b(weights_.data() + l.bias_offset,
                                                                     l.out_c);
      Matrix& out = acts.act[li];
      out.noalias() = cols * w;
      out.rowwise() += b;
      out = out.cwiseMax(T{0});
      input = out.data();
    }
    const Matrix& last = acts.act.back();
    acts.pooled = last.colwise().sum().transpose() / static_cast<T>(last.rows());
    const Eigen::Map<const Matrix> hw(weights_.data() + layout_.head_weight_offset, spec_.n_classes,
                                      layout_.features);
    const Eigen::Map<const Vector> hb(weights_.data() + layout_.head_bias_offset, spec_.n_classes);
    acts.logits = hw * acts.pooled + hb;
  }

  std::vector<T> forward(const Image<T>& image) const {
    Activations acts;
    forward(image, acts);
    return {acts.logits.data(), acts.logits.data() + acts.logits.size()};
  }

  /// Back-propagates d loss / d logits. Weight gradients are added into
  /// `weight_grad` (layout of weights()) and the input gradient is written to
  /// `input_grad`; either may be null.
  void backward(const Activations& acts, std::span<const T> dlogits, T* weight_grad,
                Image<T>* input_grad) const {
    const Eigen::Map<const Vector> dl(dlogits.data(), spec_.n_classes);
    const Eigen::Map<const Matrix> hw(weights_.data() + layout_.head_weight_offset, spec_.n_classes,
                                      layout_.features);
    if (weight_grad) {
      Eigen::Map<Matrix> dhw(weight_grad + layout_.head_weight_offset, spec_.n_classes, layout_.features);
      dhw.noalias() += dl * acts.pooled.transpose();
      Eigen::Map<Vector> dhb(weight_grad + layout_.head_bias_offset, spec_.n_classes);
      dhb += dl;
    }
    const Vector dpooled = hw.transpose() * dl;
    const std::size_t n_layers = layout_.conv.size();
    Matrix dact(acts.act.back().rows(), acts.act.back().cols());
    dact.rowwise() = dpooled.transpose() / static_cast<T>(dact.rows());

    Matrix dcols;
    for (std::size_t li = n_layers; li-- > 0;) {
      const ConvLayerShape& l = layout_.conv[li];
      // ReLU mask
      dact = (acts.act[li].array() > T{0}).select(dact.array(), T{0}).matrix();
      if (weight_grad) {
        Eigen::Map<Matrix> dw(weight_grad + l.weight_offset, l.patch(), l.out_c);
        dw.noalias() += acts.cols[li].transpose() * dact;
        Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>> db(weight_grad + l.bias_offset, l.out_c);
        db += dact.colwise().sum();
      }
      if (li == 0 && !input_grad) break;
      const Eigen::Map<const Matrix> w(weights_.data() + l.weight_offset, l.patch(), l.out_c);
      dcols.noalias() = dact * w.transpose();
      if (li == 0) {
        *input_grad = Image<T>(spec_.input_width, spec_.input_height, spec_.in_channels);
        col2im(l, dcols, input_grad->data().data());
      } else {
        Matrix dinput = Matrix::Zero(static_cast<Eigen::Index>(l.in_w) * l.in_h, l.in_c);
        col2im(l, dcols, dinput.data());
        dact = std::move(dinput);
      }
    }
  }

 private:
  static void im2col(const ConvLayerShape& l, const T* input, Matrix& cols) {
    for (int oy = 0; oy < l.out_h; ++oy) {
      for (int ox = 0; ox < l.out_w; ++ox) {
        T* row = cols.data() + (static_cast<std::size_t>(oy) * l.out_w + ox) * l.patch();
        for (int ky = 0; ky < 3; ++ky) {
          const int iy = oy * l.stride + ky - 1;
          for (int kx = 0; kx < 3; ++kx) {
            const int ix = ox * l.stride + kx - 1;
            T* dst = row + (ky * 3 + kx) * l.in_c;
            if (iy < 0 || iy >= l.in_h || ix < 0 || ix >= l.in_w) {
              std::fill(dst, dst + l.in_c, T{0});
            } else {
              const T* src = input + (static_cast<std::size_t>(iy) * l.in_w + ix) * l.in_c;
              std::copy(src, src + l.in_c, dst);
            }
          }
        }
      }
    }
  }

  static void col2im(const ConvLayerShape& l, const Matrix& dcols, T* dinput) {
    for (int oy = 0; oy < l.out_h; ++oy) {
      for (int ox = 0; ox < l.out_w; ++ox) {
        const T* row = dcols.data() + (static_cast<std::size_t>(oy) * l.out_w + ox) * l.patch();
        for (int ky = 0; ky < 3; ++ky) {
          const int iy = oy * l.stride + ky - 1;
          if (iy < 0 || iy >= l.in_h) continue;
          for (int kx = 0; kx < 3; ++kx) {
            const int ix = ox * l.stride + kx - 1;
            if (ix < 0 || ix >= l.in_w) continue;
            const T* src = row + (ky * 3 + kx) * l.in_c;
            T* dst = dinput + (static_cast<std::size_t>(iy) * l.in_w + ix) * l.in_c;
            for (int c = 0; c < l.in_c; ++c) dst[c] += src[c];
          }
        }
      }
    }
  }

  ClassifierSpec spec_;
  ClassifierLayout layout_;
  std::vector<T> weights_;
};

/// Argmax; ties resolve to the lowest index.
template <typename T>
int predict(std::span<const T> logits) {
  return static_cast<int>(std::max_element(logits.begin(), logits.end()) - logits.begin());
}

template <typename T>
std::vector<T> softmax(std::span<const T> logits) {
  const T peak = *std::max_element(logits.begin(), logits.end());
  std::vector<T> p(logits.size());
  T total{0};
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - peak);
    total += p[i];
  }
  for (auto& v : p) v /= total;
  return p;
}

/// -log softmax(logits)[y], max-subtracted.
template <typename T>
T cross_entropy(std::span<const T> logits, int y) {
  if (y < 0 || static_cast<std::size_t>(y) >= logits.size()) {
    fail(ErrorCode::InvalidArgument, "class index out of range");
  }
  const T peak = *std::max_element(logits.begin(), logits.end());
  T total{0};
  for (T l : logits) total += std::exp(l - peak);
  return std::max(T{0}, std::log(total) - (logits[y] - peak));
}

template <typename T>
struct InputGradient {
  T loss{};
  int prediction = 0;
  std::vector<T> logits;
  Image<T> gradient;
};

/// Exact d cross_entropy / d image.
template <typename T>
InputGradient<T> grad_input(const ClassifierModel<T>& model, const Image<T>& image, int y) {
  typename ClassifierModel<T>::Activations acts;
  model.forward(image, acts);
  InputGradient<T> out;
  out.logits.assign(acts.logits.data(), acts.logits.data() + acts.logits.size());
  out.loss = cross_entropy<T>(out.logits, y);
  out.prediction = predict<T>(out.logits);
  std::vector<T> dl = softmax<T>(out.logits);
  dl[y] -= T{1};
  model.backward(acts, dl, nullptr, &out.gradient);
  return out;
}

enum class RendererTag { Surrogate, Target };

struct LabeledView {
  Image<float> image;
  int label = 0;
  int view_id = 0;
  RendererTag renderer = RendererTag::Surrogate;
};

struct TrainParams {
  int epochs = 20;
  int batch_size = 16;
  double learning_rate = 0.005;
  double momentum = 0.9;
  std::uint64_t seed = 0;
  int max_steps = 0;  // 0: no cap
};

struct TrainResult {
  ClassifierModel<float> model;
  double final_accuracy = 0.0;
  std::vector<double> epoch_loss;
  int steps = 0;
};

template <typename T>
double classification_accuracy(const ClassifierModel<T>& model, const std::vector<LabeledView>& views) {
  if (views.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& v : views) {
    const auto logits = model.forward(v.image.template cast<T>());
    if (predict<T>(logits) == v.label) ++correct;
  }
  return static_cast<double>(correct) / views.size();
}

/// Minibatch SGD with momentum on cross-entropy, cosine-annealed learning
/// rate. Single-threaded and bitwise reproducible for a fixed seed.
inline TrainResult train_classifier(const std::vector<LabeledView>& corpus, const ClassifierSpec& spec,
                                    const TrainParams& params,
                                    const std::function<void(int, double)>& on_epoch = {}) {
  if (spec.n_classes < 2) fail(ErrorCode::InvalidArgument, "training needs at least 2 classes");
  std::vector<int> per_class(spec.n_classes, 0);
  for (const auto& v : corpus) {
    if (v.label < 0 || v.label >= spec.n_classes) {
      fail(ErrorCode::InvalidArgument, "label " + std::to_string(v.label) + " outside class range");
    }
    ++per_class[v.label];
  }
  for (int c = 0; c < spec.n_classes; ++c) {
    if (per_class[c] == 0) {
      fail(ErrorCode::InvalidArgument, "class " + std::to_string(c) + " has no training views");
    }
  }
  if (params.batch_size < 1 || params.epochs < 1) {
    fail(ErrorCode::InvalidArgument, "epochs and batch size must be positive");
  }

  TrainResult result{ClassifierModel<float>::random(spec, params.seed), 0.0, {}, 0};
  ClassifierModel<float>& model = result.model;
  std::mt19937_64 rng(params.seed ^ 0x9E3779B97F4A7C15ull);
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<float> grad(model.weights().size());
  std::vector<float> velocity(model.weights().size(), 0.0f);
  ClassifierModel<float>::Activations acts;

  const std::size_t batches_per_epoch = (corpus.size() + params.batch_size - 1) / params.batch_size;
  std::size_t total_steps = batches_per_epoch * params.epochs;
  if (params.max_steps > 0) total_steps = std::min<std::size_t>(total_steps, params.max_steps);

  std::size_t step = 0;
  for (int epoch = 0; epoch < params.epochs && step < total_steps; ++epoch) {
    // Fisher-Yates with the portable uniform, so order does not depend on the stdlib.
    for (std::size_t i = order.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(detail::uniform01(rng) * i);
      std::swap(order[i - 1], order[std::min(j, i - 1)]);
    }
    double epoch_loss = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < order.size() && step < total_steps;
         start += params.batch_size, ++step) {
      const std::size_t end = std::min(order.size(), start + params.batch_size);
      std::fill(grad.begin(), grad.end(), 0.0f);
      for (std::size_t k = start; k < end; ++k) {
        const LabeledView& v = corpus[order[k]];
        model.forward(v.image, acts);
        std::vector<float> logits(acts.logits.data(), acts.logits.data() + acts.logits.size());
        const float loss = cross_entropy<float>(logits, v.label);
        if (!std::isfinite(loss)) {
          fail(ErrorCode::DivergedLoss, "non-finite training loss at step " + std::to_string(step));
        }
        epoch_loss += loss;
        ++seen;
        std::vector<float> dl = softmax<float>(logits);
        dl[v.label] -= 1.0f;
        model.backward(acts, dl, grad.data(), nullptr);
      }
      const double progress = static_cast<double>(step) / total_steps;
      const auto lr = static_cast<float>(params.learning_rate * 0.5 * (1.0 + std::cos(3.14159265358979323846 * progress)));
      const float scale = 1.0f / static_cast<float>(end - start);
      auto w = model.weights();
      for (std::size_t i = 0; i < w.size(); ++i) {
        velocity[i] = static_cast<float>(params.momentum) * velocity[i] + grad[i] * scale;
        w[i] -= lr * velocity[i];
      }
    }
    const double mean_loss = seen ? epoch_loss / seen : 0.0;
    if (!std::isfinite(mean_loss)) fail(ErrorCode::DivergedLoss, "non-finite epoch loss");
    result.epoch_loss.push_back(mean_loss);
    if (on_epoch) on_epoch(epoch, mean_loss);
  }
  result.steps = static_cast<int>(step);
  result.final_accuracy = classification_accuracy(model, corpus);
  return result;
}

}  // namespace advtex
