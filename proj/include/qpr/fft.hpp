#pragma once

#include <vector>

#include "qpr/lattice.hpp"

namespace qpr {

// In-place batched multidimensional DFT (FFTW, unnormalized).
// Element n of batch b lives at data[b*dist + flat(n)*stride]; flat() is row-major over dims.
// sign = -1 forward (analysis), +1 backward (synthesis).
void dft(cd* data, const std::vector<int>& dims, int howmany, int stride, int dist, int sign);

inline int wrap(int k, int n) {
  int r = k % n;
  return r < 0 ? r + n : r;
}

// signed frequency of FFT bin b in a length-n transform
inline int freq(int b, int n) { return b <= n / 2 ? b : b - n; }

}  // namespace qpr
