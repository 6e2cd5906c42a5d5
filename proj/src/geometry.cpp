#include "platoonsim/geometry.hpp"

#include <algorithm>
#include <limits>

#include "platoonsim/error.hpp"

namespace platoonsim {

double normalize_angle(double angle) noexcept {
  double a = std::remainder(angle, kTwoPi);
  if (a <= -kPi) a += kTwoPi;
  return a;
}

double wrap_two_pi(double angle) noexcept {
  double a = std::fmod(angle, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  if (a >= kTwoPi) a -= kTwoPi;
  return a;
}

Vec2 rotate(const Vec2& v, double angle) noexcept {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

Pose2D compose(const Pose2D& parent, const Pose2D& child_in_parent) noexcept {
  const Vec2 p = parent.position() + rotate(child_in_parent.position(), parent.theta());
  return {p, parent.theta() + child_in_parent.theta()};
}

Pose2D inverse(const Pose2D& pose) noexcept {
  const Vec2 p = rotate(-pose.position(), -pose.theta());
  return {p, -pose.theta()};
}

Vec2 to_body_frame(const Pose2D& observer, const Vec2& point_global) noexcept {
  return rotate(point_global - observer.position(), -observer.theta());
}

Vec2 to_global_frame(const Pose2D& observer, const Vec2& point_body) noexcept {
  return observer.position() + rotate(point_body, observer.theta());
}

// --- pieces ------------------------------------------------------------------

Vec2 Arc::point_at_angle(double phi) const noexcept {
  return center + radius * unit_vector(phi);
}

Pose2D Arc::pose_at(double s) const noexcept {
  const double phi = radius > 0.0 ? start_angle + turn * s / radius : start_angle;
  return {point_at_angle(phi), phi + turn * kPi / 2.0};
}

double piece_length(const PathPiece& piece) noexcept {
  return std::visit([](const auto& p) { return p.length(); }, piece);
}

Pose2D piece_pose_at(const PathPiece& piece, double s) noexcept {
  if (const auto* line = std::get_if<LineSegment>(&piece)) {
    const Vec2 d = line->to - line->from;
    const double len = d.norm();
    const double heading = std::atan2(d.y, d.x);
    if (len <= 0.0) return {line->from, heading};
    return {line->from + (s / len) * d, heading};
  }
  return std::get<Arc>(piece).pose_at(s);
}

namespace {

PathProjection project_line(const LineSegment& line, const Vec2& p) {
  const Vec2 d = line.to - line.from;
  const double len = d.norm();
  PathProjection out;
  if (len <= 0.0) {
    out.distance = distance(p, line.from);
    return out;
  }
  const Vec2 t = (1.0 / len) * d;
  const Vec2 rel = p - line.from;
  const double along = dot(rel, t);
  out.lateral = cross(t, rel);
  out.station = std::clamp(along, 0.0, len);
  if (along < 0.0) out.overrun = along;
  if (along > len) out.overrun = along - len;
  out.distance = distance(p, line.from + out.station * t);
  return out;
}

PathProjection project_arc(const Arc& arc, const Vec2& p) {
  const Vec2 rel = p - arc.center;
  const double rho = rel.norm();
  const double phi = std::atan2(rel.y, rel.x);
  const double span = std::abs(arc.sweep);
  // Angle travelled from the start, measured in the turning direction.
  const double u = wrap_two_pi(arc.turn * (phi - arc.start_angle));
  PathProjection out;
  out.lateral = arc.turn > 0.0 ? arc.radius - rho : rho - arc.radius;
  double u_clamped = u;
  if (u > span) {
    const double past_end = u - span;
    const double before_start = kTwoPi - u;
    if (past_end <= before_start) {
      u_clamped = span;
      out.overrun = arc.radius * past_end;
    } else {
      u_clamped = 0.0;
      out.overrun = -arc.radius * before_start;
    }
  }
  out.station = arc.radius * u_clamped;
  out.distance = distance(p, arc.point_at_angle(arc.start_angle + arc.turn * u_clamped));
  return out;
}

}  // namespace

Path::Path(std::vector<PathPiece> pieces) : pieces_(std::move(pieces)) {
  offsets_.reserve(pieces_.size());
  for (const auto& piece : pieces_) {
    offsets_.push_back(total_);
    total_ += piece_length(piece);
  }
}

Pose2D Path::pose_at(double s) const noexcept {
  if (pieces_.empty()) return {};
  s = std::clamp(s, 0.0, total_);
  auto it = std::upper_bound(offsets_.begin(), offsets_.end(), s);
  std::size_t idx = it == offsets_.begin() ? 0 : static_cast<std::size_t>(it - offsets_.begin()) - 1;
  return piece_pose_at(pieces_[idx], s - offsets_[idx]);
}

PathProjection Path::project(const Vec2& point) const noexcept {
  PathProjection best;
  best.distance = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pieces_.size(); ++i) {
    PathProjection cand = std::visit(
        [&](const auto& p) {
          if constexpr (std::is_same_v<std::decay_t<decltype(p)>, LineSegment>)
            return project_line(p, point);
          else
            return project_arc(p, point);
        },
        pieces_[i]);
    if (cand.overrun < 0.0 && i != 0) cand.overrun = 0.0;
    if (cand.overrun > 0.0 && i + 1 != pieces_.size()) cand.overrun = 0.0;
    cand.station += offsets_[i];
    if (cand.distance < best.distance) best = cand;
  }
  return best;
}

std::vector<Pose2D> Path::sample(double spacing) const {
  if (!(spacing > 0.0)) throw SimError(ErrorCode::InvalidArgument, "sample spacing must be > 0");
  if (pieces_.empty()) return {};
  const auto n = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(total_ / spacing)));
  std::vector<Pose2D> out;
  out.reserve(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    out.push_back(pose_at(total_ * static_cast<double>(i) / static_cast<double>(n)));
  }
  return out;
}

// --- Dubins CSC ----------------------------------------------------------------

const char* to_string(CscWord word) noexcept {
  switch (word) {
    case CscWord::LSL: return "LSL";
    case CscWord::RSR: return "RSR";
    case CscWord::LSR: return "LSR";
    case CscWord::RSL: return "RSL";
  }
  return "?";
}

Pose2D CSCPlan::end_pose() const noexcept { return second_arc.pose_at(second_arc.length()); }

Path CSCPlan::as_path() const {
  std::vector<PathPiece> pieces;
  if (!first_arc_degenerate) pieces.emplace_back(first_arc);
  if (!straight_degenerate) pieces.emplace_back(straight);
  if (!second_arc_degenerate) pieces.emplace_back(second_arc);
  return Path(std::move(pieces));
}

namespace {

// Rounding can leave a zero turn just below 2pi; treat that as no turn.
double turn_amount(double raw) {
  const double w = wrap_two_pi(raw);
  return w > kTwoPi - 1e-10 ? 0.0 : w;
}

Vec2 circle_center(const Pose2D& pose, double r, double turn) {
  const double s = std::sin(pose.theta());
  const double c = std::cos(pose.theta());
  return {pose.x() - turn * r * s, pose.y() + turn * r * c};
}

}  // namespace

std::optional<CSCPlan> dubins_csc_word(const Pose2D& start, const Pose2D& goal, double r,
                                       CscWord word) {
  const double turn1 = (word == CscWord::LSL || word == CscWord::LSR) ? 1.0 : -1.0;
  const double turn2 = (word == CscWord::LSL || word == CscWord::RSL) ? 1.0 : -1.0;
  const Vec2 c1 = circle_center(start, r, turn1);
  const Vec2 c2 = circle_center(goal, r, turn2);
  const Vec2 d = c2 - c1;
  const double dist = d.norm();

  // Heading of the connecting straight.
  double psi = 0.0;
  if (turn1 == turn2) {
    if (dist < 1e-12 * std::max(1.0, r)) {
      psi = goal.theta();  // coincident circles: the whole turn happens on the first arc
    } else {
      psi = std::atan2(d.y, d.x);
    }
  } else {
    if (dist < 2.0 * r) return std::nullopt;
    const double offset = std::asin(std::min(1.0, 2.0 * r / dist));
    psi = std::atan2(d.y, d.x) + turn1 * offset;
  }

  CSCPlan plan;
  plan.word = word;
  plan.start = start;

  plan.first_arc.center = c1;
  plan.first_arc.radius = r;
  plan.first_arc.turn = turn1;
  plan.first_arc.start_angle = start.theta() - turn1 * kPi / 2.0;
  plan.first_arc.sweep = turn1 * turn_amount(turn1 * (psi - start.theta()));

  plan.second_arc.center = c2;
  plan.second_arc.radius = r;
  plan.second_arc.turn = turn2;
  plan.second_arc.start_angle = psi - turn2 * kPi / 2.0;
  plan.second_arc.sweep = turn2 * turn_amount(turn2 * (goal.theta() - psi));

  plan.straight.from = plan.first_arc.end_point();
  plan.straight.to = plan.second_arc.start_point();
  if (turn1 == turn2 && dist < 1e-12 * std::max(1.0, r)) plan.straight.to = plan.straight.from;

  plan.first_arc_degenerate = plan.first_arc.length() < kDegenerateLength;
  plan.straight_degenerate = plan.straight.length() < kDegenerateLength;
  plan.second_arc_degenerate = plan.second_arc.length() < kDegenerateLength;
  return plan;
}

CSCPlan dubins_csc(const Pose2D& start, const Pose2D& goal, double r_min) {
  if (!(r_min > 0.0) || !std::isfinite(r_min))
    throw SimError(ErrorCode::InvalidArgument, "r_min must be positive and finite");
  for (double v : {start.x(), start.y(), start.theta(), goal.x(), goal.y(), goal.theta()}) {
    if (!std::isfinite(v)) throw SimError(ErrorCode::InvalidArgument, "non-finite pose");
  }
  std::optional<CSCPlan> best;
  for (CscWord word : kCscWords) {
    auto cand = dubins_csc_word(start, goal, r_min, word);
    if (cand && (!best || cand->length() < best->length())) best = std::move(cand);
  }
  if (!best) throw SimError(ErrorCode::NoCscSolution, "no curve-straight-curve word connects the poses");
  return *best;
}

std::vector<Pose2D> sample_polyline(const CSCPlan& plan, double spacing) {
  if (!(spacing > 0.0)) throw SimError(ErrorCode::InvalidArgument, "sample spacing must be > 0");
  const Path path = plan.as_path();
  if (path.empty()) return {plan.start};
  return path.sample(spacing);
}

}  // namespace platoonsim
