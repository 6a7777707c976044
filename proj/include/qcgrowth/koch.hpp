#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "geometry.hpp"

namespace qcg {

struct Pt2 {
  double x = 0.0, y = 0.0;
};

inline Pt2 operator+(Pt2 a, Pt2 b) { return {a.x + b.x, a.y + b.y}; }
inline Pt2 operator-(Pt2 a, Pt2 b) { return {a.x - b.x, a.y - b.y}; }
inline Pt2 operator*(double s, Pt2 a) { return {s * a.x, s * a.y}; }
inline double cross(Pt2 a, Pt2 b) { return a.x * b.y - a.y * b.x; }
inline double orient(Pt2 a, Pt2 b, Pt2 c) { return cross(b - a, c - a); }

/// Source and target triangle of one affine piece, both counter-clockwise.
struct AffinePiece {
  std::array<Pt2, 3> src;
  std::array<Pt2, 3> dst;

  double src_area() const { return 0.5 * orient(src[0], src[1], src[2]); }
  double dst_area() const { return 0.5 * orient(dst[0], dst[1], dst[2]); }
  double jacobian() const { return dst_area() / src_area(); }

  /// Affine image of p (p need not lie inside src).
  Pt2 map(Pt2 p) const {
    const double a = src_area() * 2.0;
    const double l1 = orient(src[0], p, src[2]) / a;
    const double l2 = orient(src[0], src[1], p) / a;
    const double l0 = 1.0 - l1 - l2;
    return l0 * dst[0] + l1 * dst[1] + l2 * dst[2];
  }
  bool contains(Pt2 p, double tol = 1e-13) const {
    const double a = src_area() * 2.0;
    return orient(p, src[1], src[2]) / a >= -tol && orient(src[0], p, src[2]) / a >= -tol &&
           orient(src[0], src[1], p) / a >= -tol;
  }
  /// Max/min singular value ratio of the linear part.
  double dilatation() const {
    const double s00 = src[1].x - src[0].x, s01 = src[2].x - src[0].x;
    const double s10 = src[1].y - src[0].y, s11 = src[2].y - src[0].y;
    const double d00 = dst[1].x - dst[0].x, d01 = dst[2].x - dst[0].x;
    const double d10 = dst[1].y - dst[0].y, d11 = dst[2].y - dst[0].y;
    const double det = s00 * s11 - s01 * s10;
    const double i00 = s11 / det, i01 = -s01 / det, i10 = -s10 / det, i11 = s00 / det;
    const double a = d00 * i00 + d01 * i10, b = d00 * i01 + d01 * i11;
    const double c = d10 * i00 + d11 * i10, d = d10 * i01 + d11 * i11;
    const double fro = a * a + b * b + c * c + d * d;
    const double j = std::abs(a * d - b * c);
    const double disc = std::sqrt(std::max(0.0, fro * fro - 4.0 * j * j));
    const double s1 = std::sqrt(0.5 * (fro + disc));
    const double s2 = j / s1;
    return s1 / s2;
  }
};

/// Piecewise-affine homeomorphism h_L of [-1,1]^2, the identity on the
/// boundary, sending the midline [-1,1] x {0} onto the level-L Koch polyline
/// over the same segment.
///
/// Each segment AB carries a diamond cell with apexes at heights kUp and -kDown
/// (relative to |AB|). Refining a cell splits the source segment at 1/3, 1/2,
/// 2/3 and the target at the Koch points; the four child diamonds plus twelve
/// filler triangles tile the parent diamond on both sides.
class SquareHomeomorphism {
 public:
  static constexpr double kUp = 0.5;
  static constexpr double kDown = 0.2;

  explicit SquareHomeomorphism(int level) : level_(level) {
    if (level < 0) throw InvalidInput("SquareHomeomorphism: level must be >= 0");
    const Pt2 a{-1.0, 0.0}, b{1.0, 0.0};
    build(a, b, a, b, level);
    const Pt2 u{0.0, 1.0}, d{0.0, -2.0 * kDown};
    const Pt2 c00{-1.0, -1.0}, c10{1.0, -1.0}, c11{1.0, 1.0}, c01{-1.0, 1.0};
    for (const auto& t : std::vector<std::array<Pt2, 3>>{{a, u, c01}, {u, b, c11}, {a, c00, d}, {c00, c10, d}, {d, c10, b}})
      outer_.push_back({t, t});
  }

  int level() const { return level_; }

  Pt2 operator()(Pt2 p) const {
    if (const AffinePiece* piece = locate(p)) return piece->map(p);
    return p;
  }

  /// Jacobian determinant of the piece containing p (1 outside the cell).
  double jacobian(Pt2 p) const {
    const AffinePiece* piece = locate(p);
    return piece ? piece->jacobian() : 1.0;
  }

  const AffinePiece* locate(Pt2 p) const {
    if (p.x < -1.0 - 1e-12 || p.x > 1.0 + 1e-12 || p.y < -1.0 - 1e-12 || p.y > 1.0 + 1e-12)
      throw DomainError("SquareHomeomorphism: point outside [-1,1]^2");
    if (!in_diamond(nodes_[0], p)) {
      for (const auto& o : outer_)
        if (o.contains(p)) return &o;
      return nullptr;
    }
    int idx = 0;
    for (;;) {
      const Node& nd = nodes_[static_cast<std::size_t>(idx)];
      int next = -1;
      for (int c : nd.children)
        if (c >= 0 && in_diamond(nodes_[static_cast<std::size_t>(c)], p)) {
          next = c;
          break;
        }
      if (next >= 0) {
        idx = next;
        continue;
      }
      const AffinePiece* best = nullptr;
      double best_margin = -1e300;
      for (int k = nd.first_piece; k < nd.first_piece + nd.piece_count; ++k) {
        const AffinePiece& pc = pieces_[static_cast<std::size_t>(k)];
        const double a = pc.src_area() * 2.0;
        const double m = std::min({orient(p, pc.src[1], pc.src[2]), orient(pc.src[0], p, pc.src[2]),
                                   orient(pc.src[0], pc.src[1], p)}) / a;
        if (m > best_margin) {
          best_margin = m;
          best = &pc;
        }
      }
      return best;
    }
  }

  /// All affine pieces: cell triangles followed by the identity triangles
  /// between the top-level diamond and the square boundary.
  std::vector<AffinePiece> pieces() const {
    std::vector<AffinePiece> all = pieces_;
    all.insert(all.end(), outer_.begin(), outer_.end());
    return all;
  }
  std::size_t cell_piece_count() const { return pieces_.size(); }

  double max_dilatation() const {
    double k = 1.0;
    for (const auto& p : pieces_) k = std::max(k, p.dilatation());
    return k;
  }

  /// Image of the midline: Koch polyline vertices from (-1,0) to (1,0).
  std::vector<Pt2> midline_image() const {
    std::vector<Pt2> pts;
    koch_points({-1.0, 0.0}, {1.0, 0.0}, level_, pts);
    pts.push_back({1.0, 0.0});
    return pts;
  }

  /// Breakpoints of the midline in source coordinates.
  std::vector<double> midline_breaks() const {
    std::vector<double> xs;
    source_breaks(-1.0, 1.0, level_, xs);
    xs.push_back(1.0);
    return xs;
  }

 private:
  struct Node {
    Pt2 sa, sb, up, down;
    std::array<int, 4> children{-1, -1, -1, -1};
    int first_piece = 0;
    int piece_count = 0;
  };

  static Pt2 at(Pt2 a, Pt2 b, double x, double y) {
    const Pt2 d = b - a;
    const Pt2 nrm{-d.y, d.x};
    return a + x * d + y * nrm;
  }

  static bool in_diamond(const Node& nd, Pt2 p, double tol = 1e-12) {
    const double scale = (nd.sb.x - nd.sa.x) * (nd.sb.x - nd.sa.x) + (nd.sb.y - nd.sa.y) * (nd.sb.y - nd.sa.y);
    const double e = tol * scale;
    return orient(nd.sa, nd.sb, p) >= -e ? (orient(nd.sb, nd.up, p) >= -e && orient(nd.up, nd.sa, p) >= -e)
                                         : (orient(nd.sa, nd.down, p) >= -e && orient(nd.down, nd.sb, p) >= -e);
  }

  int build(Pt2 sa, Pt2 sb, Pt2 ta, Pt2 tb, int level) {
    const int idx = static_cast<int>(nodes_.size());
    nodes_.push_back({sa, sb, at(sa, sb, 0.5, kUp), at(sa, sb, 0.5, -kDown), {-1, -1, -1, -1}, 0, 0});

    if (level == 0) {
      const int first = static_cast<int>(pieces_.size());
      pieces_.push_back({{sa, sb, at(sa, sb, 0.5, kUp)}, {ta, tb, at(ta, tb, 0.5, kUp)}});
      pieces_.push_back({{sa, at(sa, sb, 0.5, -kDown), sb}, {ta, at(ta, tb, 0.5, -kDown), tb}});
      nodes_[static_cast<std::size_t>(idx)].first_piece = first;
      nodes_[static_cast<std::size_t>(idx)].piece_count = 2;
      return idx;
    }

    const double h = std::sqrt(3.0) / 6.0;
    const std::array<Pt2, 5> sp{at(sa, sb, 0, 0), at(sa, sb, 1.0 / 3, 0), at(sa, sb, 0.5, 0), at(sa, sb, 2.0 / 3, 0), at(sa, sb, 1, 0)};
    const std::array<Pt2, 5> tp{at(ta, tb, 0, 0), at(ta, tb, 1.0 / 3, 0), at(ta, tb, 0.5, h), at(ta, tb, 2.0 / 3, 0), at(ta, tb, 1, 0)};
    std::array<int, 4> kids{};
    for (int k = 0; k < 4; ++k) kids[static_cast<std::size_t>(k)] = build(sp[k], sp[k + 1], tp[k], tp[k + 1], level - 1);
    nodes_[static_cast<std::size_t>(idx)].children = kids;

    struct Pair {
      Pt2 s, t;
    };
    const Pair U{at(sa, sb, 0.5, kUp), at(ta, tb, 0.5, kUp)};
    const Pair D{at(sa, sb, 0.5, -kDown), at(ta, tb, 0.5, -kDown)};
    std::array<Pair, 4> ui{}, di{};
    std::array<Pair, 5> v{};
    for (int k = 0; k < 4; ++k) {
      ui[k] = {at(sp[k], sp[k + 1], 0.5, kUp), at(tp[k], tp[k + 1], 0.5, kUp)};
      di[k] = {at(sp[k], sp[k + 1], 0.5, -kDown), at(tp[k], tp[k + 1], 0.5, -kDown)};
    }
    for (int k = 0; k < 5; ++k) v[k] = {sp[k], tp[k]};

    const std::array<std::array<Pair, 3>, 12> fill{{
        {ui[0], v[1], ui[1]}, {U, ui[0], ui[1]}, {U, ui[1], v[2]}, {U, v[2], ui[2]}, {U, ui[2], ui[3]}, {ui[2], v[3], ui[3]},
        {di[1], di[2], v[2]}, {D, v[1], di[0]}, {D, di[1], v[1]}, {D, di[2], di[1]}, {D, v[3], di[2]}, {D, di[3], v[3]},
    }};
    const int first = static_cast<int>(pieces_.size());
    for (const auto& tri : fill) pieces_.push_back({{tri[0].s, tri[1].s, tri[2].s}, {tri[0].t, tri[1].t, tri[2].t}});
    nodes_[static_cast<std::size_t>(idx)].first_piece = first;
    nodes_[static_cast<std::size_t>(idx)].piece_count = 12;
    return idx;
  }

  static void koch_points(Pt2 a, Pt2 b, int level, std::vector<Pt2>& out) {
    if (level == 0) {
      out.push_back(a);
      return;
    }
    const std::array<Pt2, 5> p{a, at(a, b, 1.0 / 3, 0), at(a, b, 0.5, std::sqrt(3.0) / 6.0), at(a, b, 2.0 / 3, 0), b};
    for (int k = 0; k < 4; ++k) koch_points(p[k], p[k + 1], level - 1, out);
  }

  static void source_breaks(double a, double b, int level, std::vector<double>& out) {
    if (level == 0) {
      out.push_back(a);
      return;
    }
    const std::array<double, 5> p{a, a + (b - a) / 3.0, 0.5 * (a + b), a + 2.0 * (b - a) / 3.0, b};
    for (int k = 0; k < 4; ++k) source_breaks(p[k], p[k + 1], level - 1, out);
  }

  int level_;
  std::vector<Node> nodes_;
  std::vector<AffinePiece> pieces_;
  std::vector<AffinePiece> outer_;
};

inline double polyline_length(const std::vector<Pt2>& pts) {
  double s = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) s += std::hypot(pts[i].x - pts[i - 1].x, pts[i].y - pts[i - 1].y);
  return s;
}

}  // namespace qcg
