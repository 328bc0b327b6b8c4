#pragma once

#include <vector>

#include "lung/features.hpp"
#include "lung/tensor.hpp"

namespace lung::testing {

/// Straight-line MFCC chain with an O(N^2) DFT, written without the
/// production helpers. Returns [coefficient][frame] before pad/truncate.
std::vector<std::vector<double>> reference_cepstra(const std::vector<double>& samples, const MfccConfig& cfg);

/// Quadruple-loop valid 2x2 convolution on (H, W, C) data.
BasicTensor<double> reference_conv(const BasicTensor<double>& x, const BasicTensor<double>& kernel,
                                   const BasicTensor<double>& bias);

/// Four-way max over 2x2 windows, first occurrence on ties.
BasicTensor<double> reference_maxpool(const BasicTensor<double>& x);

}  // namespace lung::testing
