#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <variant>
#include <vector>

namespace platoonsim {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Wraps an angle to (-pi, pi]; -pi maps to +pi.
double normalize_angle(double angle) noexcept;

/// Wraps an angle to [0, 2pi).
double wrap_two_pi(double angle) noexcept;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2& operator+=(const Vec2& o) noexcept { x += o.x; y += o.y; return *this; }
  Vec2& operator-=(const Vec2& o) noexcept { x -= o.x; y -= o.y; return *this; }
  friend Vec2 operator+(Vec2 a, const Vec2& b) noexcept { return a += b; }
  friend Vec2 operator-(Vec2 a, const Vec2& b) noexcept { return a -= b; }
  friend Vec2 operator*(double s, const Vec2& v) noexcept { return {s * v.x, s * v.y}; }
  friend Vec2 operator*(const Vec2& v, double s) noexcept { return {s * v.x, s * v.y}; }
  friend Vec2 operator-(const Vec2& v) noexcept { return {-v.x, -v.y}; }
  friend bool operator==(const Vec2&, const Vec2&) = default;

  double norm() const noexcept { return std::hypot(x, y); }
  bool finite() const noexcept { return std::isfinite(x) && std::isfinite(y); }
};

inline double dot(const Vec2& a, const Vec2& b) noexcept { return a.x * b.x + a.y * b.y; }
inline double cross(const Vec2& a, const Vec2& b) noexcept { return a.x * b.y - a.y * b.x; }
inline double distance(const Vec2& a, const Vec2& b) noexcept { return (a - b).norm(); }
inline Vec2 unit_vector(double heading) noexcept { return {std::cos(heading), std::sin(heading)}; }
/// Rotates counter-clockwise by `angle`.
Vec2 rotate(const Vec2& v, double angle) noexcept;

/// Planar pose in some parent frame. Heading is always kept in (-pi, pi].
class Pose2D {
 public:
  Pose2D() = default;
  Pose2D(double x, double y, double theta) noexcept : x_(x), y_(y), theta_(normalize_angle(theta)) {}
  Pose2D(const Vec2& position, double theta) noexcept : Pose2D(position.x, position.y, theta) {}

  double x() const noexcept { return x_; }
  double y() const noexcept { return y_; }
  double theta() const noexcept { return theta_; }
  Vec2 position() const noexcept { return {x_, y_}; }
  Vec2 heading_vector() const noexcept { return unit_vector(theta_); }

  friend bool operator==(const Pose2D&, const Pose2D&) = default;

 private:
  double x_ = 0.0;
  double y_ = 0.0;
  double theta_ = 0.0;
};

/// Expresses `child_in_parent` in the frame that `parent` is given in.
Pose2D compose(const Pose2D& parent, const Pose2D& child_in_parent) noexcept;
Pose2D inverse(const Pose2D& pose) noexcept;
Vec2 to_body_frame(const Pose2D& observer, const Vec2& point_global) noexcept;
Vec2 to_global_frame(const Pose2D& observer, const Vec2& point_body) noexcept;

// --- path primitives -------------------------------------------------------

struct LineSegment {
  Vec2 from;
  Vec2 to;

  double length() const noexcept { return distance(from, to); }
};

/// Circular arc. The point at parameter phi is center + radius*(cos phi, sin phi);
/// travel goes from start_angle to start_angle + sweep. `turn` is +1 for a left
/// (counter-clockwise) arc and -1 for a right one; it fixes the heading even
/// when the sweep is zero.
struct Arc {
  Vec2 center;
  double radius = 0.0;
  double start_angle = 0.0;
  double sweep = 0.0;
  double turn = 1.0;

  double length() const noexcept { return radius * std::abs(sweep); }
  Vec2 point_at_angle(double phi) const noexcept;
  Vec2 start_point() const noexcept { return point_at_angle(start_angle); }
  Vec2 end_point() const noexcept { return point_at_angle(start_angle + sweep); }
  /// Pose after travelling `s` meters along the arc.
  Pose2D pose_at(double s) const noexcept;
};

using PathPiece = std::variant<LineSegment, Arc>;

double piece_length(const PathPiece& piece) noexcept;
Pose2D piece_pose_at(const PathPiece& piece, double s) noexcept;

struct PathProjection {
  double station = 0.0;   ///< arc length of the closest point, clamped to [0, length]
  double lateral = 0.0;   ///< signed offset, positive to the left of travel
  double overrun = 0.0;   ///< <0 before the start, >0 past the end, 0 inside
  double distance = 0.0;  ///< Euclidean distance to the closest point
};

/// Chain of line/arc pieces parameterized by arc length.
class Path {
 public:
  Path() = default;
  explicit Path(std::vector<PathPiece> pieces);

  const std::vector<PathPiece>& pieces() const noexcept { return pieces_; }
  double length() const noexcept { return total_; }
  bool empty() const noexcept { return pieces_.empty(); }
  Pose2D pose_at(double s) const noexcept;
  Pose2D start_pose() const noexcept { return pose_at(0.0); }
  Pose2D end_pose() const noexcept { return pose_at(total_); }
  PathProjection project(const Vec2& point) const noexcept;
  /// Samples at `n = ceil(length/spacing)` equal intervals, both ends included.
  std::vector<Pose2D> sample(double spacing) const;

 private:
  std::vector<PathPiece> pieces_;
  std::vector<double> offsets_;
  double total_ = 0.0;
};

// --- Dubins curve-straight-curve planner ------------------------------------

/// Components shorter than this are treated as vanishing.
inline constexpr double kDegenerateLength = 1e-6;

enum class CscWord { LSL, RSR, LSR, RSL };
inline constexpr std::array<CscWord, 4> kCscWords{CscWord::LSL, CscWord::RSR, CscWord::LSR,
                                                   CscWord::RSL};
const char* to_string(CscWord word) noexcept;

struct CSCPlan {
  CscWord word = CscWord::LSL;
  Pose2D start;
  Arc first_arc;
  LineSegment straight;
  Arc second_arc;
  bool first_arc_degenerate = false;
  bool straight_degenerate = false;
  bool second_arc_degenerate = false;

  double length() const noexcept {
    return first_arc.length() + straight.length() + second_arc.length();
  }
  /// End pose evaluated from the plan geometry (not copied from the request).
  Pose2D end_pose() const noexcept;
  /// Non-degenerate components in travel order.
  Path as_path() const;
};

/// Builds the given word, or nullopt when its tangent construction is infeasible.
std::optional<CSCPlan> dubins_csc_word(const Pose2D& start, const Pose2D& goal, double r_min,
                                       CscWord word);

/// Shortest CSC connection; length ties resolve in the order LSL, RSR, LSR, RSL.
/// Throws SimError(InvalidArgument) for r_min <= 0 and NoCscSolution if no word applies.
CSCPlan dubins_csc(const Pose2D& start, const Pose2D& goal, double r_min);

/// Dense samples of the plan, consecutive samples at most `spacing` apart.
std::vector<Pose2D> sample_polyline(const CSCPlan& plan, double spacing);

}  // namespace platoonsim
