#pragma once

#include <cassert>
#include <cstddef>
#include <vector>

namespace maxrigid {

// Dense frames x points table, row-major by frame.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(std::size_t frames, std::size_t points, const T& fill = T{})
      : frames_(frames), points_(points), data_(frames * points, fill) {}

  std::size_t frames() const noexcept { return frames_; }
  std::size_t points() const noexcept { return points_; }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(std::size_t frame, std::size_t point) {
    assert(frame < frames_ && point < points_);
    return data_[frame * points_ + point];
  }
  const T& operator()(std::size_t frame, std::size_t point) const {
    assert(frame < frames_ && point < points_);
    return data_[frame * points_ + point];
  }

  const std::vector<T>& data() const noexcept { return data_; }

  bool operator==(const Grid&) const = default;

 private:
  std::size_t frames_ = 0;
  std::size_t points_ = 0;
  std::vector<T> data_;
};

}  // namespace maxrigid
