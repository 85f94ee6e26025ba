#pragma once

// Named-layer helpers over WeightStore entries ("<name>.weight", "<name>.bias").

#include <string>

#include "lbhic/kernels.hpp"
#include "lbhic/weights.hpp"

namespace lbhic::layers {

inline Tensor conv(const Tensor& x, const WeightStore& w, const std::string& name, int stride, int pad,
                   Activation act = Activation::none) {
  Tensor y = conv2d(x, w.kernel(name + ".weight"), w.vector(name + ".bias"), stride, pad);
  activate_inplace(y, act);
  return y;
}

inline Tensor tconv(const Tensor& x, const WeightStore& w, const std::string& name, int stride, int pad,
                    int output_padding, Activation act = Activation::none) {
  Tensor y = tconv2d(x, w.kernel(name + ".weight"), w.vector(name + ".bias"), stride, pad, output_padding);
  activate_inplace(y, act);
  return y;
}

inline NonlocalWeights nonlocal(const WeightStore& w, const std::string& name) {
  return {w.kernel(name + ".theta.weight"), w.vector(name + ".theta.bias"),
          w.kernel(name + ".phi.weight"),   w.vector(name + ".phi.bias"),
          w.kernel(name + ".g.weight"),     w.vector(name + ".g.bias"),
          w.kernel(name + ".out.weight"),   w.vector(name + ".out.bias")};
}

}  // namespace lbhic::layers
