// Copyright 2026 The sciq Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SCIQ_LAYERS_HPP_
#define SCIQ_LAYERS_HPP_

// Building blocks of the patch network. Activations are stored with one row
// per channel and one column per pixel; pixel columns are ordered patch-major,
// then row-major inside each patch.

#include <algorithm>
#include <cmath>
#include <vector>

#include "sciq/core.hpp"

namespace sciq::layers {

struct Geometry {
  Index patches = 0;
  int height = 0;
  int width = 0;

  Index plane() const { return static_cast<Index>(height) * width; }
  Index pixels() const { return patches * plane(); }
};

using IndexMap = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>;

namespace detail {

// Upper bound on im2col buffer entries per chunk.
inline constexpr Index kIm2colBudget = Index{1} << 23;

inline Index chunk_patches(Index cin, const Geometry& g) {
  return std::max<Index>(1, kIm2colBudget / std::max<Index>(1, 9 * cin * g.plane()));
}

// 3x3, stride 1, zero padding 1. Row index of `cols` is (ky * 3 + kx) * cin + c.
template <typename S>
void im2col3x3(const Mat<S>& x, const Geometry& g, Index p0, Index np, Mat<S>& cols) {
  const Index cin = x.rows(), hw = g.plane();
  cols.resize(9 * cin, np * hw);
  for (Index p = 0; p < np; ++p) {
    const Index base = (p0 + p) * hw;
    for (int y = 0; y < g.height; ++y)
      for (int xx = 0; xx < g.width; ++xx) {
        const Index j = p * hw + static_cast<Index>(y) * g.width + xx;
        for (int ky = 0; ky < 3; ++ky)
          for (int kx = 0; kx < 3; ++kx) {
            const int sy = y + ky - 1, sx = xx + kx - 1;
            auto dst = cols.col(j).segment((ky * 3 + kx) * cin, cin);
            if (sy < 0 || sy >= g.height || sx < 0 || sx >= g.width)
              dst.setZero();
            else
              dst = x.col(base + static_cast<Index>(sy) * g.width + sx);
          }
      }
  }
}

template <typename S>
void col2im3x3_add(const Mat<S>& dcols, const Geometry& g, Index p0, Index np, Mat<S>& dx) {
  const Index cin = dx.rows(), hw = g.plane();
  for (Index p = 0; p < np; ++p) {
    const Index base = (p0 + p) * hw;
    for (int y = 0; y < g.height; ++y)
      for (int xx = 0; xx < g.width; ++xx) {
        const Index j = p * hw + static_cast<Index>(y) * g.width + xx;
        for (int ky = 0; ky < 3; ++ky)
          for (int kx = 0; kx < 3; ++kx) {
            const int sy = y + ky - 1, sx = xx + kx - 1;
            if (sy < 0 || sy >= g.height || sx < 0 || sx >= g.width) continue;
            dx.col(base + static_cast<Index>(sy) * g.width + sx) +=
                dcols.col(j).segment((ky * 3 + kx) * cin, cin);
          }
      }
  }
}

}  // namespace detail

/// 3x3 same-size convolution. `w` is cout x 9*cin, `b` is cout x 1.
template <typename S>
Mat<S> conv3x3(const Mat<S>& x, const Geometry& g, const Mat<S>& w, const Mat<S>& b) {
  const Index cin = x.rows(), hw = g.plane();
  Mat<S> out(w.rows(), g.pixels());
  Mat<S> cols;
  const Index step = detail::chunk_patches(cin, g);
  for (Index p0 = 0; p0 < g.patches; p0 += step) {
    const Index np = std::min(step, g.patches - p0);
    detail::im2col3x3(x, g, p0, np, cols);
    out.middleCols(p0 * hw, np * hw).noalias() = w * cols;
  }
  out.colwise() += b.col(0);
  return out;
}

/// Accumulates weight/bias gradients and returns d/dx (empty if !need_dx).
template <typename S>
Mat<S> conv3x3_backward(const Mat<S>& x, const Geometry& g, const Mat<S>& w, const Mat<S>& dout,
                        Mat<S>& dw, Mat<S>& db, bool need_dx) {
  const Index cin = x.rows(), hw = g.plane();
  Mat<S> dx;
  if (need_dx) dx = Mat<S>::Zero(cin, g.pixels());
  Mat<S> cols, dcols;
  const Index step = detail::chunk_patches(cin, g);
  for (Index p0 = 0; p0 < g.patches; p0 += step) {
    const Index np = std::min(step, g.patches - p0);
    detail::im2col3x3(x, g, p0, np, cols);
    const auto dblock = dout.middleCols(p0 * hw, np * hw);
    dw.noalias() += dblock * cols.transpose();
    if (need_dx) {
      dcols.noalias() = w.transpose() * dblock;
      detail::col2im3x3_add(dcols, g, p0, np, dx);
    }
  }
  db.col(0) += dout.rowwise().sum();
  return dx;
}

template <typename S>
void relu_inplace(Mat<S>& x) {
  x = x.cwiseMax(S(0));
}

/// Zeroes gradient entries where the forward output was not positive.
template <typename S>
void relu_backward_inplace(const Mat<S>& out, Mat<S>& grad) {
  grad = (out.array() > S(0)).select(grad, S(0));
}

/// 2x2 max pooling with stride 2. Records the winning source column per
/// output entry; ties go to the first candidate.
template <typename S>
Mat<S> maxpool2x2(const Mat<S>& x, const Geometry& g, IndexMap& argmax) {
  const int ho = g.height / 2, wo = g.width / 2;
  const Index hw = g.plane(), ohw = static_cast<Index>(ho) * wo;
  Mat<S> out(x.rows(), g.patches * ohw);
  argmax.resize(x.rows(), out.cols());
  for (Index p = 0; p < g.patches; ++p)
    for (int y = 0; y < ho; ++y)
      for (int xx = 0; xx < wo; ++xx) {
        const Index o = p * ohw + static_cast<Index>(y) * wo + xx;
        const Index s0 = p * hw + static_cast<Index>(2 * y) * g.width + 2 * xx;
        const Index src[4] = {s0, s0 + 1, s0 + g.width, s0 + g.width + 1};
        for (Index c = 0; c < x.rows(); ++c) {
          Index best = src[0];
          for (int k = 1; k < 4; ++k)
            if (x(c, src[k]) > x(c, best)) best = src[k];
          out(c, o) = x(c, best);
          argmax(c, o) = static_cast<int>(best);
        }
      }
  return out;
}

template <typename S>
Mat<S> maxpool2x2_backward(const IndexMap& argmax, Index input_cols, const Mat<S>& dout) {
  Mat<S> dx = Mat<S>::Zero(dout.rows(), input_cols);
  for (Index o = 0; o < dout.cols(); ++o)
    for (Index c = 0; c < dout.rows(); ++c) dx(c, argmax(c, o)) += dout(c, o);
  return dx;
}

/// Adaptive pooling cell bounds: [floor(i*n/k), ceil((i+1)*n/k)).
struct Window {
  int begin, end;
};

inline std::vector<Window> adaptive_windows(int n, int k) {
  std::vector<Window> w(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) w[static_cast<std::size_t>(i)] = {(i * n) / k, ((i + 1) * n + k - 1) / k};
  return w;
}

inline constexpr int kPoolCells = 3;

/// Adaptive mean and (population) std pooling to a 3x3 grid per patch.
/// Outputs are channels x (patches * 9), cells row-major.
template <typename S>
void adaptive_mean_std(const Mat<S>& x, const Geometry& g, Mat<S>& mean, Mat<S>& stdev) {
  const auto wy = adaptive_windows(g.height, kPoolCells);
  const auto wx = adaptive_windows(g.width, kPoolCells);
  const Index cells = kPoolCells * kPoolCells, hw = g.plane();
  mean.resize(x.rows(), g.patches * cells);
  stdev.resize(x.rows(), g.patches * cells);
  Vec<S> sum(x.rows()), sq(x.rows()), lo(x.rows()), hi(x.rows());
  for (Index p = 0; p < g.patches; ++p)
    for (int i = 0; i < kPoolCells; ++i)
      for (int j = 0; j < kPoolCells; ++j) {
        const Index o = p * cells + i * kPoolCells + j;
        const Window& a = wy[static_cast<std::size_t>(i)];
        const Window& b = wx[static_cast<std::size_t>(j)];
        const S cnt = static_cast<S>((a.end - a.begin) * (b.end - b.begin));
        sum.setZero();
        lo = x.col(p * hw + static_cast<Index>(a.begin) * g.width + b.begin);
        hi = lo;
        for (int y = a.begin; y < a.end; ++y)
          for (int xx = b.begin; xx < b.end; ++xx) {
            const auto v = x.col(p * hw + static_cast<Index>(y) * g.width + xx);
            sum += v;
            lo = lo.cwiseMin(v);
            hi = hi.cwiseMax(v);
          }
        const Vec<S> m = sum / cnt;
        sq.setZero();
        for (int y = a.begin; y < a.end; ++y)
          for (int xx = b.begin; xx < b.end; ++xx)
            sq += (x.col(p * hw + static_cast<Index>(y) * g.width + xx) - m).cwiseAbs2();
        mean.col(o) = m;
        // A flat cell has zero spread even when the mean rounds off its value.
        stdev.col(o) = (hi.array() > lo.array()).select((sq / cnt).cwiseSqrt(), S(0));
      }
}

/// Gradient through `adaptive_mean_std`. Cells with zero std pass no
/// gradient through the std branch.
template <typename S>
Mat<S> adaptive_mean_std_backward(const Mat<S>& x, const Geometry& g, const Mat<S>& mean,
                                  const Mat<S>& stdev, const Mat<S>& dmean, const Mat<S>& dstd) {
  const auto wy = adaptive_windows(g.height, kPoolCells);
  const auto wx = adaptive_windows(g.width, kPoolCells);
  const Index cells = kPoolCells * kPoolCells, hw = g.plane();
  Mat<S> dx = Mat<S>::Zero(x.rows(), x.cols());
  Vec<S> coef(x.rows());
  for (Index p = 0; p < g.patches; ++p)
    for (int i = 0; i < kPoolCells; ++i)
      for (int j = 0; j < kPoolCells; ++j) {
        const Index o = p * cells + i * kPoolCells + j;
        const Window& a = wy[static_cast<std::size_t>(i)];
        const Window& b = wx[static_cast<std::size_t>(j)];
        const S cnt = static_cast<S>((a.end - a.begin) * (b.end - b.begin));
        for (Index c = 0; c < x.rows(); ++c)
          coef(c) = stdev(c, o) > S(0) ? dstd(c, o) / (cnt * stdev(c, o)) : S(0);
        const Vec<S> dm = dmean.col(o) / cnt;
        for (int y = a.begin; y < a.end; ++y)
          for (int xx = b.begin; xx < b.end; ++xx) {
            const Index col = p * hw + static_cast<Index>(y) * g.width + xx;
            dx.col(col) += dm + coef.cwiseProduct(x.col(col) - mean.col(o));
          }
      }
  return dx;
}

}  // namespace sciq::layers

#endif  // SCIQ_LAYERS_HPP_
