#pragma once

#include "tmc/kde.hpp"
#include "tmc/prototypes.hpp"
#include "tmc/roi.hpp"
#include "tmc/track.hpp"

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tmc::classify {

enum class Method { ee, dir, vote, ml };

inline constexpr std::array<Method, 4> kAllMethods{Method::ee, Method::dir, Method::vote, Method::ml};

std::string_view to_string(Method m);
Method method_from_string(std::string_view s);
std::vector<Method> parse_methods(std::string_view csv);

enum class Domain { camera, ground };
std::string_view to_string(Domain d);
Domain domain_from_string(std::string_view s);

struct ClassifiedTrack {
  std::string track_id;
  std::optional<MovementClass> cls;  // nullopt = unclassifiable
  Method method;
  double score = 0.0;  // ee: 1, dir: cosine, vote: vote share, ml: log-likelihood margin
};

ClassifiedTrack classify_ee(const Track& t, const RegionOfInterest& roi);

/// Prototype whose entry-to-exit direction has the largest cosine with the track's.
ClassifiedTrack classify_dir(const Track& t, const proto::PrototypeSet& prototypes);

/// Plurality of per-point votes for the class of the nearest prototype. Ties
/// go to the smaller summed point-to-class distance, then the lower index.
ClassifiedTrack classify_vote(const Track& t, const proto::PrototypeSet& prototypes);

/// Maximum conditional log-likelihood under a uniform class prior.
ClassifiedTrack classify_ml(const Track& t, const kde::MovementLikelihoodModel& model);

struct CountReport {
  std::string camera_id;
  Domain domain = Domain::ground;
  Method method = Method::ml;
  std::array<int, kNumClasses> counts{};  // indexed by class index - 1
  int unclassifiable = 0;

  int count(const MovementClass& c) const { return counts[static_cast<std::size_t>(c.index() - 1)]; }
  int total_classified() const;
};

/// Models needed by the prototype and likelihood classifiers; EE only needs the ROI.
struct Models {
  const RegionOfInterest* roi = nullptr;
  const proto::PrototypeSet* prototypes = nullptr;
  const kde::MovementLikelihoodModel* likelihood = nullptr;
};

ClassifiedTrack classify(const Track& t, Method method, const Models& models);

std::vector<ClassifiedTrack> classify_all(std::span<const Track> tracks, Method method, const Models& models);

CountReport count_movements(std::span<const Track> tracks, Method method, const Models& models,
                            std::string camera_id = {}, Domain domain = Domain::ground);

CountReport tally(std::span<const ClassifiedTrack> classified, Method method, std::string camera_id,
                  Domain domain);

}  // namespace tmc::classify
