#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "perc/distributions.hpp"
#include "perc/geometry.hpp"
#include "perc/pointprocess.hpp"

namespace perc {

// Raised when a color-field window contains no seed at all; the realization
// is rejected and the rejection is counted by the caller.
struct EmptyWindowError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Non-decreasing step function [0,1] -> (0,inf) given as a breakpoint table
// (at most 64 pieces).  value(z) = values[k] on [thresholds[k-1],
// thresholds[k]), with implicit 0 and 1 endpoints.  Step tables make inverse
// images and tail bounds exact.
class PullTable {
 public:
  explicit PullTable(double constant_value);
  PullTable(std::vector<double> thresholds, std::vector<double> values);

  double value(double z) const;
  double min_value() const { return values_.front(); }
  double max_value() const { return values_.back(); }

  // P(value(Z) >= r) for Z uniform on [0,1]; piecewise exact.
  double survival(double r) const;

  std::string describe() const;

 private:
  std::vector<double> thresholds_;  // ascending, size values_.size() - 1
  std::vector<double> values_;      // non-decreasing, positive
};

struct BooleanModel {
  double lambda = 0.0;
  RadiusLaw law = RadiusLaw::constant(1.0);
};

struct VoronoiModel {
  double q = 0.5;
  PullTable g0{1.0};
  PullTable g1{1.0};

  double pull_min() const { return std::min(g0.min_value(), g1.min_value()); }
  double pull_max() const { return std::max(g0.max_value(), g1.max_value()); }
};

struct ConfettiModel {
  double q = 0.5;
  PullTable g0{1.0};
  PullTable g1{1.0};

  double g_min() const { return std::min(g0.min_value(), g1.min_value()); }
  double g_max() const { return std::max(g0.max_value(), g1.max_value()); }
};

// Boolean occupied set as a disc list plus its truncation budget.
std::pair<std::vector<Disc>, TailBudget> boolean_discs(
    const BooleanModel& model, const Rect& window, double eps,
    RngStream& stream);

// Point-color oracle over one realization.  Queries after construction are
// deterministic; the confetti field may extend its own time horizon while
// answering, so an instance belongs to a single thread.
class ColorField {
 public:
  virtual ~ColorField() = default;
  virtual bool black_at(Point y) = 0;
  const Rect& window() const { return window_; }

 protected:
  Rect window_;
};

class VoronoiField : public ColorField {
 public:
  // Seeds at unit intensity in the window padded by l*(1 + b/a), where l
  // solves pixel_budget * exp(-pi l^2) <= eps (void bound over the pixels
  // that may ever be queried).
  VoronoiField(const VoronoiModel& model, const Rect& window, double eps,
               RngStream& stream, double pixel_budget = 4096.0 * 4096.0);

  bool black_at(Point y) override;

  // Reference scan over every seed; used to validate the pruned search.
  bool black_at_exhaustive(Point y) const;

  std::size_t seed_count() const { return sx_.size(); }

 private:
  struct Best {
    double ratio2;
    std::uint32_t idx;
  };
  Best query(Point y) const;
  bool lex_less(std::uint32_t a, std::uint32_t b) const;

  double pull_max_ = 1.0;
  double cell_ = 1.0;
  std::int64_t cx0_ = 0, cy0_ = 0;
  std::int64_t ncx_ = 0, ncy_ = 0;
  std::vector<std::uint32_t> offsets_;
  // Seed attributes, sorted by (cell, x, y, z, s).
  std::vector<double> sx_, sy_, w_;  // w = 1 / pull^2
  std::vector<double> sz_, ss_;
  std::vector<std::uint8_t> black_;
};

class ConfettiField : public ColorField {
 public:
  // Space padding certified against the exact table tails for every horizon
  // up to T0 * 2^max_doublings; the horizon starts at T0 = 4/(pi g_min^2)
  // and doubles on demand, preserving earlier points.  The field captures a
  // copy of the stream for those extensions; the supplied stream must not be
  // reused afterwards.
  ConfettiField(const ConfettiModel& model, const Rect& window, double eps,
                RngStream& stream, int max_doublings = 12);

  bool black_at(Point y) override;

  double horizon() const { return horizon_; }
  double padding() const { return padding_; }

 private:
  void extend();
  void rebuild_buckets();

  ConfettiModel model_;
  Rect padded_;
  RngStream stream_;
  double horizon_ = 0.0;
  double padding_ = 0.0;
  int doublings_left_ = 0;
  std::vector<MarkedPoint> raw_;

  double cell_ = 1.0;
  std::int64_t cx0_ = 0, cy0_ = 0;
  std::int64_t ncx_ = 0, ncy_ = 0;
  std::vector<std::uint32_t> offsets_;
  // Bucket payloads, duplicated per overlapped cell so a query touches one
  // contiguous range.
  std::vector<double> bx_, by_, brad2_, bt_;
  std::vector<std::uint8_t> bblack_;
};

std::unique_ptr<ColorField> realize_colorfield(const VoronoiModel& model,
                                               const Rect& window, double eps,
                                               RngStream& stream);
std::unique_ptr<ColorField> realize_colorfield(const ConfettiModel& model,
                                               const Rect& window, double eps,
                                               RngStream& stream);

}  // namespace perc
