#ifndef FADERSYNTH_STATS_H_
#define FADERSYNTH_STATS_H_

#include <optional>
#include <span>
#include <vector>

namespace fadersynth {

// 1-based ranks; tied values share the average of their ranks.
std::vector<double> AverageRanks(std::span<const double> values);

// Pearson correlation; nullopt when either input is constant.
std::optional<double> Pearson(std::span<const double> a, std::span<const double> b);

// Spearman rank-order correlation (Pearson of average ranks). nullopt when
// either input is constant. Throws ShapeError for unequal lengths and
// LengthError for fewer than two samples.
std::optional<double> Spearman(std::span<const double> a, std::span<const double> b);

double Mean(std::span<const double> v);

}  // namespace fadersynth

#endif  // FADERSYNTH_STATS_H_
