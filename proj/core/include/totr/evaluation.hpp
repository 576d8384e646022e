#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "totr/kinematics.hpp"
#include "totr/predictor.hpp"

namespace totr {

/// Quartiles use linear interpolation between order statistics at position
/// p * (n - 1) (the default of R's quantile()).
struct Summary {
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double mean = 0.0;
  double q3 = 0.0;
  double max = 0.0;
};

Summary summarize(const std::vector<double>& values);

/// Summed Euclidean Error: per frame, the sum over joints of the distance
/// between truth and prediction, in centimeters.
struct SeeSeries {
  std::vector<std::size_t> frames;  ///< frame index of every value
  std::vector<double> values_cm;
  Summary summary;
};

SeeSeries see(const MotionSequence& truth, const MotionSequence& pred);

/// Error introduced by the fixed-length back-transform alone: angles from
/// the true per-frame distances, positions rebuilt with median lengths.
SeeSeries backtransform_error(const MotionSequence& truth, const Skeleton& skel);

/// Accuracy at one horizon (1-based frames after the last observed frame)
/// of a batch series against the Cartesian ground truth, together with the
/// zero-velocity baseline that holds the last observed pose.
struct HorizonReport {
  std::size_t horizon_frames = 0;
  SeeSeries model;
  SeeSeries baseline;
};

HorizonReport evaluate_horizon(const MotionSequence& truth, const std::vector<PredictionBatch>& batches,
                               std::size_t horizon_frames);

/// "frame,see_cm" rows.
std::string see_csv(const SeeSeries& series);
SeeSeries parse_see_csv(const std::string& text);

/// Two-line table "min,q1,median,mean,q3,max" plus values.
std::string summary_table(const Summary& s);

/// Plot-ready rows for one joint/axis at one horizon:
/// frame,truth,prediction,lower_1,upper_1,lower_2,upper_2,lower_3,upper_3
/// Bands are symmetric around the prediction; `deviation` holds one value per
/// row (0 when no band is available).
std::string plot_csv(const std::vector<std::size_t>& frames, const std::vector<double>& truth,
                     const std::vector<double>& prediction, const std::vector<double>& deviation);

}  // namespace totr
