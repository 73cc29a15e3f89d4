#include "tmc/classify.hpp"

#include "tmc/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

namespace tmc::classify {

std::string_view to_string(Method m) {
  switch (m) {
    case Method::ee: return "ee";
    case Method::dir: return "dir";
    case Method::vote: return "vote";
    case Method::ml: return "ml";
  }
  return "?";
}

Method method_from_string(std::string_view s) {
  if (s == "ee") return Method::ee;
  if (s == "dir") return Method::dir;
  if (s == "vote") return Method::vote;
  if (s == "ml") return Method::ml;
  throw Error(Errc::config, "unknown classification method '" + std::string(s) + "'");
}

std::vector<Method> parse_methods(std::string_view csv) {
  if (csv == "all") return {kAllMethods.begin(), kAllMethods.end()};
  std::vector<Method> out;
  std::size_t pos = 0;
  while (pos <= csv.size()) {
    const auto comma = csv.find(',', pos);
    const auto tok = csv.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
    if (!tok.empty()) {
      const Method m = method_from_string(tok);
      if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
    }
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  if (out.empty()) throw Error(Errc::config, "no classification methods given");
  return out;
}

std::string_view to_string(Domain d) { return d == Domain::camera ? "camera" : "ground"; }

Domain domain_from_string(std::string_view s) {
  if (s == "camera") return Domain::camera;
  if (s == "ground") return Domain::ground;
  throw Error(Errc::config, "unknown domain '" + std::string(s) + "'");
}

namespace {

void require_frame(const Track& t, Frame f, std::string_view what) {
  if (t.frame != f) {
    std::ostringstream msg;
    msg << "track " << t.track_id << " is in " << to_string(t.frame) << " but the " << what << " is in "
        << to_string(f);
    throw Error(Errc::frame_mismatch, msg.str());
  }
}

double box_distance(const Vec2& p, const Box2& b) {
  const double dx = std::max({b.min.x() - p.x(), 0.0, p.x() - b.max.x()});
  const double dy = std::max({b.min.y() - p.y(), 0.0, p.y() - b.max.y()});
  return std::hypot(dx, dy);
}

}  // namespace

ClassifiedTrack classify_ee(const Track& t, const RegionOfInterest& roi) {
  ClassifiedTrack out{t.track_id, std::nullopt, Method::ee, 0.0};
  try {
    out.cls = entry_exit_class(t, roi);
    out.score = 1.0;
  } catch (const Error& e) {
    if (e.code() != Errc::unclassifiable) throw;
  }
  return out;
}

ClassifiedTrack classify_dir(const Track& t, const proto::PrototypeSet& prototypes) {
  ClassifiedTrack out{t.track_id, std::nullopt, Method::dir, 0.0};
  if (prototypes.size() == 0) throw Error(Errc::invalid_argument, "DIR needs at least one prototype");
  require_frame(t, prototypes.frame, "prototype set");
  Vec2 dir;
  try {
    dir = track_direction(t);
  } catch (const Error& e) {
    if (e.code() != Errc::degenerate_track) throw;
    return out;
  }
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& [idx, tracks] : prototypes.classes) {
    for (const auto& p : tracks) {
      const Vec2 d = p.points.back() - p.points.front();
      if (!(d.norm() > 0.0)) continue;
      const double c = dir.dot(d.normalized());
      if (c > best) {
        best = c;
        out.cls = MovementClass::from_index(idx);
      }
    }
  }
  if (out.cls) out.score = best;
  return out;
}

ClassifiedTrack classify_vote(const Track& t, const proto::PrototypeSet& prototypes) {
  ClassifiedTrack out{t.track_id, std::nullopt, Method::vote, 0.0};
  const auto flat = prototypes.flatten();
  if (flat.empty()) throw Error(Errc::invalid_argument, "VOTE needs at least one prototype");
  require_frame(t, prototypes.frame, "prototype set");
  if (t.points.empty()) return out;

  std::vector<Box2> boxes;
  boxes.reserve(flat.size());
  for (const auto& p : flat) boxes.push_back(bounding_box(p.track.points));

  std::array<int, kNumClasses> votes{};
  std::vector<std::pair<double, std::size_t>> order(flat.size());
  for (const auto& pt : t.points) {
    for (std::size_t i = 0; i < flat.size(); ++i) order[i] = {box_distance(pt, boxes[i]), i};
    std::sort(order.begin(), order.end());
    double best = std::numeric_limits<double>::infinity();
    std::size_t winner = order.front().second;
    for (const auto& [lb, i] : order) {
      if (lb > best) break;
      const double d = point_to_polyline_distance(pt, flat[i].track.points);
      // Equal distances go to the lower class index.
      if (d < best || (d == best && flat[i].cls.index() < flat[winner].cls.index())) {
        best = d;
        winner = i;
      }
    }
    ++votes[static_cast<std::size_t>(flat[winner].cls.index() - 1)];
  }

  const int top = *std::max_element(votes.begin(), votes.end());
  std::vector<int> tied;
  for (int c = 0; c < kNumClasses; ++c)
    if (votes[static_cast<std::size_t>(c)] == top) tied.push_back(c + 1);
  int chosen = tied.front();
  if (tied.size() > 1) {
    double best_sum = std::numeric_limits<double>::infinity();
    for (int cls : tied) {
      double sum = 0.0;
      for (const auto& pt : t.points) {
        double d = std::numeric_limits<double>::infinity();
        for (const auto& p : flat)
          if (p.cls.index() == cls) d = std::min(d, point_to_polyline_distance(pt, p.track.points));
        sum += d;
      }
      if (sum < best_sum) {
        best_sum = sum;
        chosen = cls;
      }
    }
  }
  out.cls = MovementClass::from_index(chosen);
  out.score = static_cast<double>(top) / static_cast<double>(t.points.size());
  return out;
}

ClassifiedTrack classify_ml(const Track& t, const kde::MovementLikelihoodModel& model) {
  ClassifiedTrack out{t.track_id, std::nullopt, Method::ml, 0.0};
  require_frame(t, model.frame, "likelihood model");
  double best = -std::numeric_limits<double>::infinity();
  double second = -std::numeric_limits<double>::infinity();
  for (const auto& [idx, map] : model.classes) {
    const double ll = kde::track_log_likelihood(t, map, model.floor_density);
    if (ll > best) {
      second = best;
      best = ll;
      out.cls = MovementClass::from_index(idx);
    } else if (ll > second) {
      second = ll;
    }
  }
  if (out.cls) out.score = std::isfinite(second) ? best - second : 0.0;
  return out;
}

int CountReport::total_classified() const {
  int s = 0;
  for (int c : counts) s += c;
  return s;
}

ClassifiedTrack classify(const Track& t, Method method, const Models& models) {
  switch (method) {
    case Method::ee:
      if (!models.roi) throw Error(Errc::config, "EE needs an ROI");
      return classify_ee(t, *models.roi);
    case Method::dir:
      if (!models.prototypes) throw Error(Errc::config, "DIR needs prototypes");
      return classify_dir(t, *models.prototypes);
    case Method::vote:
      if (!models.prototypes) throw Error(Errc::config, "VOTE needs prototypes");
      return classify_vote(t, *models.prototypes);
    case Method::ml:
      if (!models.likelihood) throw Error(Errc::config, "ML needs a likelihood model");
      return classify_ml(t, *models.likelihood);
  }
  throw Error(Errc::invalid_argument, "unknown method");
}

std::vector<ClassifiedTrack> classify_all(std::span<const Track> tracks, Method method, const Models& models) {
  std::vector<ClassifiedTrack> out;
  out.reserve(tracks.size());
  for (const auto& t : tracks) out.push_back(classify(t, method, models));
  return out;
}

CountReport tally(std::span<const ClassifiedTrack> classified, Method method, std::string camera_id,
                  Domain domain) {
  CountReport r;
  r.camera_id = std::move(camera_id);
  r.domain = domain;
  r.method = method;
  for (const auto& c : classified) {
    if (c.cls)
      ++r.counts[static_cast<std::size_t>(c.cls->index() - 1)];
    else
      ++r.unclassifiable;
  }
  return r;
}

CountReport count_movements(std::span<const Track> tracks, Method method, const Models& models,
                            std::string camera_id, Domain domain) {
  const auto classified = classify_all(tracks, method, models);
  return tally(classified, method, std::move(camera_id), domain);
}

}  // namespace tmc::classify
