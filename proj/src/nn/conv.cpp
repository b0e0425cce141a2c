#include "finclass/nn/layers.hpp"

namespace finclass::nn {

Shape conv2d_output_shape(const Shape& input, const Shape& filters,
                          Padding padding) {
  if (input.size() != 3 || filters.size() != 4) {
    throw InvalidShape("conv2d expects input [H,W,C] and filters [K,K,C,F], got " +
                       to_string(input) + " and " + to_string(filters));
  }
  const std::size_t k = filters[0];
  if (filters[1] != k || k == 0 || filters[3] == 0) {
    throw InvalidShape("conv2d filters must be square with F >= 1, got " +
                       to_string(filters));
  }
  if (padding == Padding::kSame && k % 2 == 0) {
    throw InvalidShape("same-padded conv2d needs an odd kernel, got " +
                       std::to_string(k));
  }
  if (filters[2] != input[2]) {
    throw InvalidShape("conv2d filter depth " + std::to_string(filters[2]) +
                       " does not match input channels " + std::to_string(input[2]));
  }
  if (padding == Padding::kSame) return {input[0], input[1], filters[3]};
  if (input[0] < k || input[1] < k) {
    throw InvalidShape("conv2d input " + to_string(input) +
                       " smaller than kernel " + std::to_string(k));
  }
  return {input[0] - k + 1, input[1] - k + 1, filters[3]};
}

namespace {

struct Geometry {
  long in_h, in_w, channels, k, filters, out_h, out_w, pad;
};

template <typename T>
Geometry geometry(const BasicTensor<T>& input, const ConvParams<T>& p) {
  const auto out = conv2d_output_shape(input.shape(), p.filters.shape(), p.padding);
  if (p.bias.rank() != 1 || p.bias.size() != out[2]) {
    throw InvalidShape("conv2d bias must have shape [" + std::to_string(out[2]) +
                       "], got " + to_string(p.bias.shape()));
  }
  const auto k = static_cast<long>(p.filters.dim(0));
  return {static_cast<long>(input.dim(0)), static_cast<long>(input.dim(1)),
          static_cast<long>(input.dim(2)), k, static_cast<long>(out[2]),
          static_cast<long>(out[0]),       static_cast<long>(out[1]),
          p.padding == Padding::kSame ? k / 2 : 0};
}

}  // namespace

template <typename T>
BasicTensor<T> conv2d_forward(const BasicTensor<T>& input,
                              const ConvParams<T>& params) {
  const Geometry g = geometry(input, params);
  BasicTensor<T> out({static_cast<std::size_t>(g.out_h),
                      static_cast<std::size_t>(g.out_w),
                      static_cast<std::size_t>(g.filters)});
  const T* __restrict in = input.data().data();
  const T* __restrict w = params.filters.data().data();
  const T* __restrict bias = params.bias.data().data();
  T* __restrict dst = out.data().data();

  for (long oy = 0; oy < g.out_h; ++oy) {
    for (long ox = 0; ox < g.out_w; ++ox) {
      T* __restrict acc = dst + (oy * g.out_w + ox) * g.filters;
      for (long f = 0; f < g.filters; ++f) acc[f] = bias[f];
      for (long dy = 0; dy < g.k; ++dy) {
        const long iy = oy + dy - g.pad;
        if (iy < 0 || iy >= g.in_h) continue;
        for (long dx = 0; dx < g.k; ++dx) {
          const long ix = ox + dx - g.pad;
          if (ix < 0 || ix >= g.in_w) continue;
          const T* px = in + (iy * g.in_w + ix) * g.channels;
          const T* taps = w + (dy * g.k + dx) * g.channels * g.filters;
          for (long c = 0; c < g.channels; ++c) {
            const T v = px[c];
            const T* row = taps + c * g.filters;
            for (long f = 0; f < g.filters; ++f) acc[f] += v * row[f];
          }
        }
      }
    }
  }
  return out;
}

template <typename T>
ConvGradients<T> conv2d_backward(const BasicTensor<T>& input,
                                 const ConvParams<T>& params,
                                 const BasicTensor<T>& grad_output,
                                 bool want_input_grad) {
  const Geometry g = geometry(input, params);
  if (grad_output.shape() != Shape{static_cast<std::size_t>(g.out_h),
                                   static_cast<std::size_t>(g.out_w),
                                   static_cast<std::size_t>(g.filters)}) {
    throw InvalidShape("conv2d upstream gradient has shape " +
                       to_string(grad_output.shape()));
  }
  ConvGradients<T> grads{BasicTensor<T>{}, BasicTensor<T>(params.filters.shape()),
                         BasicTensor<T>(params.bias.shape())};

  const T* __restrict in = input.data().data();
  const T* __restrict go = grad_output.data().data();
  T* __restrict dw = grads.filters.data().data();
  T* __restrict db = grads.bias.data().data();

  for (long pos = 0; pos < g.out_h * g.out_w; ++pos) {
    const T* grow = go + pos * g.filters;
    for (long f = 0; f < g.filters; ++f) db[f] += grow[f];
  }

  // Filter gradient: every output position adds input * upstream.
  for (long oy = 0; oy < g.out_h; ++oy) {
    for (long ox = 0; ox < g.out_w; ++ox) {
      const T* grow = go + (oy * g.out_w + ox) * g.filters;
      for (long dy = 0; dy < g.k; ++dy) {
        const long iy = oy + dy - g.pad;
        if (iy < 0 || iy >= g.in_h) continue;
        for (long dx = 0; dx < g.k; ++dx) {
          const long ix = ox + dx - g.pad;
          if (ix < 0 || ix >= g.in_w) continue;
          const T* px = in + (iy * g.in_w + ix) * g.channels;
          T* taps = dw + (dy * g.k + dx) * g.channels * g.filters;
          for (long c = 0; c < g.channels; ++c) {
            const T v = px[c];
            T* row = taps + c * g.filters;
            for (long f = 0; f < g.filters; ++f) row[f] += v * grow[f];
          }
        }
      }
    }
  }

  if (!want_input_grad) return grads;

  // Input gradient through filters transposed to [K, K, F, C] so the inner
  // loop runs over contiguous channels.
  std::vector<T> wt(params.filters.size());
  const T* w = params.filters.data().data();
  for (long tap = 0; tap < g.k * g.k; ++tap)
    for (long c = 0; c < g.channels; ++c)
      for (long f = 0; f < g.filters; ++f)
        wt[static_cast<std::size_t>((tap * g.filters + f) * g.channels + c)] =
            w[(tap * g.channels + c) * g.filters + f];

  grads.input = BasicTensor<T>(input.shape());
  T* __restrict di = grads.input.data().data();
  for (long oy = 0; oy < g.out_h; ++oy) {
    for (long ox = 0; ox < g.out_w; ++ox) {
      const T* grow = go + (oy * g.out_w + ox) * g.filters;
      for (long dy = 0; dy < g.k; ++dy) {
        const long iy = oy + dy - g.pad;
        if (iy < 0 || iy >= g.in_h) continue;
        for (long dx = 0; dx < g.k; ++dx) {
          const long ix = ox + dx - g.pad;
          if (ix < 0 || ix >= g.in_w) continue;
          T* px = di + (iy * g.in_w + ix) * g.channels;
          const T* taps = wt.data() + (dy * g.k + dx) * g.filters * g.channels;
          for (long f = 0; f < g.filters; ++f) {
            const T gv = grow[f];
            const T* row = taps + f * g.channels;
            for (long c = 0; c < g.channels; ++c) px[c] += gv * row[c];
          }
        }
      }
    }
  }
  return grads;
}

template BasicTensor<float> conv2d_forward(const BasicTensor<float>&,
                                           const ConvParams<float>&);
template BasicTensor<double> conv2d_forward(const BasicTensor<double>&,
                                            const ConvParams<double>&);
template ConvGradients<float> conv2d_backward(const BasicTensor<float>&,
                                              const ConvParams<float>&,
                                              const BasicTensor<float>&, bool);
template ConvGradients<double> conv2d_backward(const BasicTensor<double>&,
                                               const ConvParams<double>&,
                                               const BasicTensor<double>&, bool);

}  // namespace finclass::nn
