#pragma once

// Finite weighted graphs with classified absorbing vertices.
//
// Vertices are dense indices 0..size()-1. Builders order lattice vertices
// lexicographically by coordinate (first coordinate most significant) and put
// absorbing vertices last. Vertices of class top, side or cemetery are
// absorbing: the beta field lives only on the other vertices and an absorbing
// neighbor contributes its conductance to the effective boundary field.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace vrjp {

enum class VertexClass { interior, top, side, cemetery, plain };

inline bool is_absorbing(VertexClass c) {
    return c == VertexClass::top || c == VertexClass::side || c == VertexClass::cemetery;
}

inline const char* to_string(VertexClass c) {
    switch (c) {
        case VertexClass::interior: return "interior";
        case VertexClass::top: return "top";
        case VertexClass::side: return "side";
        case VertexClass::cemetery: return "cemetery";
        case VertexClass::plain: return "plain";
    }
    return "?";
}

inline VertexClass parse_vertex_class(const std::string& s) {
    if (s == "interior") return VertexClass::interior;
    if (s == "top") return VertexClass::top;
    if (s == "side") return VertexClass::side;
    if (s == "cemetery") return VertexClass::cemetery;
    if (s == "plain") return VertexClass::plain;
    throw std::invalid_argument("unknown vertex class '" + s + "'");
}

using Coord = std::vector<int>;

class WeightedGraph {
public:
    struct Neighbor {
        int v;
        double w;
    };

    int add_vertex(VertexClass cls, double eta = 0.0, Coord coord = {}) {
        if (!(eta >= 0.0) || !std::isfinite(eta))
            throw std::invalid_argument("eta must be finite and nonnegative");
        if (cls == VertexClass::cemetery && cemetery())
            throw std::invalid_argument("a graph carries at most one cemetery vertex");
        classes_.push_back(cls);
        eta_.push_back(eta);
        self_.push_back(0.0);
        adj_.emplace_back();
        coords_.push_back(std::move(coord));
        return static_cast<int>(classes_.size()) - 1;
    }

    // Sets W_uv = W_vu = w; w == 0 deletes the edge. u == v sets the self-loop.
    void set_conductance(int u, int v, double w) {
        check_vertex(u);
        check_vertex(v);
        if (!(w >= 0.0) || !std::isfinite(w))
            throw std::invalid_argument("conductance must be finite and nonnegative");
        if (u == v) {
            self_[u] = w;
            return;
        }
        put(u, v, w);
        put(v, u, w);
    }

    void add_conductance(int u, int v, double w) { set_conductance(u, v, conductance(u, v) + w); }

    double conductance(int u, int v) const {
        check_vertex(u);
        check_vertex(v);
        if (u == v) return self_[u];
        const auto& a = adj_[u];
        auto it = std::lower_bound(a.begin(), a.end(), v,
                                   [](const Neighbor& n, int key) { return n.v < key; });
        return (it != a.end() && it->v == v) ? it->w : 0.0;
    }

    std::size_t size() const { return classes_.size(); }
    VertexClass vertex_class(int v) const { return classes_.at(v); }
    bool absorbing(int v) const { return is_absorbing(classes_.at(v)); }
    double eta(int v) const { return eta_.at(v); }
    void set_eta(int v, double e) {
        if (!(e >= 0.0)) throw std::invalid_argument("eta must be nonnegative");
        eta_.at(v) = e;
    }
    const Coord& coord(int v) const { return coords_.at(v); }
    double self_loop(int v) const { return self_.at(v); }

    // Off-diagonal neighbors sorted by index.
    const std::vector<Neighbor>& neighbors(int v) const { return adj_.at(v); }

    std::optional<int> root() const { return root_; }
    void set_root(std::optional<int> r) {
        if (r) check_vertex(*r);
        root_ = r;
    }

    std::optional<int> cemetery() const {
        for (std::size_t i = 0; i < classes_.size(); ++i)
            if (classes_[i] == VertexClass::cemetery) return static_cast<int>(i);
        return std::nullopt;
    }

    std::vector<int> vertices_of(VertexClass c) const {
        std::vector<int> out;
        for (std::size_t i = 0; i < classes_.size(); ++i)
            if (classes_[i] == c) out.push_back(static_cast<int>(i));
        return out;
    }

    // Vertices that carry a beta value.
    std::vector<int> free_vertices() const {
        std::vector<int> out;
        for (std::size_t i = 0; i < classes_.size(); ++i)
            if (!is_absorbing(classes_[i])) out.push_back(static_cast<int>(i));
        return out;
    }

    double absorbing_conductance(int v) const {
        double s = 0.0;
        for (const auto& n : adj_.at(v))
            if (is_absorbing(classes_[n.v])) s += n.w;
        return s;
    }

    // eta plus conductance into absorbing vertices: the boundary field seen by
    // the beta law on the free vertices.
    double effective_eta(int v) const { return eta_.at(v) + absorbing_conductance(v); }

    double degree(int v) const {
        double s = self_.at(v);
        for (const auto& n : adj_.at(v)) s += n.w;
        return s;
    }

    std::optional<int> find(const Coord& c) const {
        auto it = std::find(coords_.begin(), coords_.end(), c);
        if (it == coords_.end() || c.empty()) return std::nullopt;
        return static_cast<int>(it - coords_.begin());
    }

    std::size_t edge_count() const {
        std::size_t e = 0;
        for (std::size_t i = 0; i < adj_.size(); ++i) {
            for (const auto& n : adj_[i])
                if (n.v > static_cast<int>(i)) ++e;
            if (self_[i] > 0.0) ++e;
        }
        return e;
    }

    bool operator==(const WeightedGraph& o) const {
        if (classes_ != o.classes_ || eta_ != o.eta_ || self_ != o.self_ || coords_ != o.coords_ ||
            root_ != o.root_)
            return false;
        for (std::size_t i = 0; i < adj_.size(); ++i) {
            if (adj_[i].size() != o.adj_[i].size()) return false;
            for (std::size_t k = 0; k < adj_[i].size(); ++k)
                if (adj_[i][k].v != o.adj_[i][k].v || adj_[i][k].w != o.adj_[i][k].w) return false;
        }
        return true;
    }

private:
    void check_vertex(int v) const {
        if (v < 0 || static_cast<std::size_t>(v) >= classes_.size())
            throw std::out_of_range("vertex index " + std::to_string(v) + " out of range");
    }

    void put(int u, int v, double w) {
        auto& a = adj_[u];
        auto it = std::lower_bound(a.begin(), a.end(), v,
                                   [](const Neighbor& n, int key) { return n.v < key; });
        if (it != a.end() && it->v == v) {
            if (w == 0.0)
                a.erase(it);
            else
                it->w = w;
        } else if (w != 0.0) {
            a.insert(it, Neighbor{v, w});
        }
    }

    std::vector<VertexClass> classes_;
    std::vector<double> eta_;
    std::vector<double> self_;
    std::vector<std::vector<Neighbor>> adj_;
    std::vector<Coord> coords_;
    std::optional<int> root_;
};

// ---------------------------------------------------------------- builders

namespace detail {

// Calls f(coord) for every point of the product of [lo[i], hi[i]] in
// lexicographic order.
template <class F>
void for_each_point(const std::vector<int>& lo, const std::vector<int>& hi, F&& f) {
    const std::size_t d = lo.size();
    for (std::size_t i = 0; i < d; ++i)
        if (hi[i] < lo[i]) return;
    Coord x = lo;
    while (true) {
        f(static_cast<const Coord&>(x));
        std::size_t i = d;
        while (i > 0) {
            --i;
            if (x[i] < hi[i]) {
                ++x[i];
                for (std::size_t j = i + 1; j < d; ++j) x[j] = lo[j];
                break;
            }
            if (i == 0) return;
        }
        if (d == 0) return;
    }
}

inline int box_index(const Coord& x, const std::vector<int>& lo, const std::vector<int>& hi) {
    int idx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] < lo[i] || x[i] > hi[i]) return -1;
        idx = idx * (hi[i] - lo[i] + 1) + (x[i] - lo[i]);
    }
    return idx;
}

}  // namespace detail

// The box [-n,n]^d with its outer boundary wired into a cemetery.
inline WeightedGraph build_box_lattice(int d, int n, double W) {
    if (d < 1) throw std::invalid_argument("dimension must be >= 1");
    if (n < 0) throw std::invalid_argument("radius must be >= 0");
    if (!(W > 0.0) || !std::isfinite(W)) throw std::invalid_argument("conductance W must be positive");
    std::vector<int> lo(d, -n), hi(d, n);
    WeightedGraph g;
    detail::for_each_point(lo, hi, [&](const Coord& x) { g.add_vertex(VertexClass::interior, 0.0, x); });
    const int star = g.add_vertex(VertexClass::cemetery);
    for (int v = 0; v < star; ++v) {
        Coord y = g.coord(v);
        for (int i = 0; i < d; ++i) {
            for (int s : {-1, 1}) {
                y[i] += s;
                const int u = detail::box_index(y, lo, hi);
                if (u < 0)
                    g.add_conductance(v, star, W);
                else if (u > v)
                    g.set_conductance(v, u, W);
                y[i] -= s;
            }
        }
    }
    g.set_root(detail::box_index(Coord(d, 0), lo, hi));
    return g;
}

enum class SideBoundary { wired, free };

// B_{n,m} = {0 <= x_d <= n-1, |x_i| <= m-1 for i < d}. Exits through level n
// go to the top vertex, lateral exits to the side vertex (dropped entirely for
// a free side). The level below 0 is outside the half-space and has no edges.
// Vertex layout: box points, then top, then side.
inline WeightedGraph build_halfspace_box(int d, int n, int m, double W,
                                         SideBoundary side = SideBoundary::wired) {
    if (d < 1) throw std::invalid_argument("dimension must be >= 1");
    if (n < 1 || m < 1) throw std::invalid_argument("height and width must be >= 1");
    if (!(W > 0.0) || !std::isfinite(W)) throw std::invalid_argument("conductance W must be positive");
    std::vector<int> lo(d, -(m - 1)), hi(d, m - 1);
    lo[d - 1] = 0;
    hi[d - 1] = n - 1;
    WeightedGraph g;
    detail::for_each_point(lo, hi, [&](const Coord& x) { g.add_vertex(VertexClass::interior, 0.0, x); });
    const int nbox = static_cast<int>(g.size());
    const int top = g.add_vertex(VertexClass::top);
    const int lat = g.add_vertex(VertexClass::side);
    for (int v = 0; v < nbox; ++v) {
        Coord y = g.coord(v);
        for (int i = 0; i < d; ++i) {
            for (int s : {-1, 1}) {
                y[i] += s;
                const int u = detail::box_index(y, lo, hi);
                if (u > v) {
                    g.set_conductance(v, u, W);
                } else if (u < 0) {
                    if (i == d - 1) {
                        if (y[i] == n) g.add_conductance(v, top, W);
                    } else if (side == SideBoundary::wired) {
                        g.add_conductance(v, lat, W);
                    }
                }
                y[i] -= s;
            }
        }
    }
    g.set_root(detail::box_index(Coord(d, 0), lo, hi));
    return g;
}

inline bool toy_eligible(int i, int n, int m) {
    const int period = 2 * m + 1;
    return i % period == 0 && std::abs(i) <= n - m - 2;
}

inline std::vector<int> toy_eligible_indices(int n, int m) {
    std::vector<int> out;
    for (int i = -n; i <= n; ++i)
        if (toy_eligible(i, n, m)) out.push_back(i);
    return out;
}

// Path [-n,n] with conductance epsilon, both ends tied to the cemetery by
// epsilon, and an extra edge (i, cemetery) of weight side_weights[i] at each
// eligible i in (2m+1)Z with |i| <= n-m-2.
inline WeightedGraph build_toy_graph(int n, int m, double epsilon,
                                     const std::map<int, double>& side_weights) {
    if (n < 0 || m < 0) throw std::invalid_argument("n and m must be >= 0");
    if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
    for (const auto& [i, w] : side_weights) {
        if (!toy_eligible(i, n, m))
            throw std::invalid_argument("side weight index " + std::to_string(i) + " is not eligible");
        if (!(w > 0.0)) throw std::invalid_argument("side weights must be positive");
    }
    WeightedGraph g;
    for (int i = -n; i <= n; ++i) g.add_vertex(VertexClass::interior, 0.0, Coord{i});
    const int star = g.add_vertex(VertexClass::cemetery);
    auto at = [n](int i) { return i + n; };
    for (int i = -n; i < n; ++i) g.set_conductance(at(i), at(i + 1), epsilon);
    g.add_conductance(at(-n), star, epsilon);
    g.add_conductance(at(n), star, epsilon);
    for (const auto& [i, w] : side_weights) g.add_conductance(at(i), star, w);
    g.set_root(at(0));
    return g;
}

// Merges S into a single cemetery appended after the surviving vertices.
// old_to_new, if given, receives the index map (-1 for merged vertices).
inline WeightedGraph wire_boundary(const WeightedGraph& g, const std::set<int>& S,
                                   std::vector<int>* old_to_new = nullptr) {
    const int N = static_cast<int>(g.size());
    if (S.empty()) throw std::invalid_argument("wire_boundary: S must be nonempty");
    if (static_cast<int>(S.size()) >= N) throw std::invalid_argument("wire_boundary: S must not be all vertices");
    for (int s : S)
        if (s < 0 || s >= N) throw std::out_of_range("wire_boundary: vertex out of range");
    if (auto c = g.cemetery(); c && !S.count(*c))
        throw std::invalid_argument("wire_boundary: existing cemetery must be part of S");
    std::vector<int> map(N, -1);
    WeightedGraph out;
    for (int v = 0; v < N; ++v)
        if (!S.count(v)) map[v] = out.add_vertex(g.vertex_class(v), g.eta(v), g.coord(v));
    const int star = out.add_vertex(VertexClass::cemetery);
    for (int v = 0; v < N; ++v) {
        if (map[v] < 0) continue;
        if (g.self_loop(v) > 0.0) out.set_conductance(map[v], map[v], g.self_loop(v));
        for (const auto& nb : g.neighbors(v)) {
            if (map[nb.v] >= 0) {
                if (nb.v > v) out.set_conductance(map[v], map[nb.v], nb.w);
            } else {
                out.add_conductance(map[v], star, nb.w);
            }
        }
    }
    if (auto r = g.root(); r && map[*r] >= 0) out.set_root(map[*r]);
    if (old_to_new) *old_to_new = std::move(map);
    return out;
}

// ---------------------------------------------------------------- comparison surgery

enum class ComparisonStep { remove_edges, duplicate_line, lower_weights };

struct ComparisonParams {
    // remove_edges / lower_weights
    std::vector<std::pair<int, int>> edges;
    // lower_weights: one value per edge, or a single value applied to all
    std::vector<double> weights;
    // duplicate_line
    std::vector<int> line;
    double epsilon = 0.0;      // conductance along the copy
    double line_weight = 0.0;  // new conductance along the original line
    double cross_weight = 1.0;
    // Conductance moved from each end of the line to the cemetery onto the
    // matching end of the copy, so contracting the cross edges restores the
    // original graph exactly.
    double end_cemetery_share = 0.0;
};

namespace detail {

inline void require_not_raised(double before, double after, int u, int v) {
    if (after > before * (1.0 + 1e-15))
        throw std::invalid_argument("comparison step would raise conductance of edge (" + std::to_string(u) +
                                    "," + std::to_string(v) + ")");
}

}  // namespace detail

inline WeightedGraph transform_comparison_step(const WeightedGraph& g, ComparisonStep step,
                                               const ComparisonParams& p) {
    WeightedGraph out = g;
    switch (step) {
        case ComparisonStep::remove_edges:
            for (auto [u, v] : p.edges) out.set_conductance(u, v, 0.0);
            break;
        case ComparisonStep::lower_weights: {
            if (p.weights.size() != 1 && p.weights.size() != p.edges.size())
                throw std::invalid_argument("lower_weights: need one weight or one per edge");
            for (std::size_t k = 0; k < p.edges.size(); ++k) {
                auto [u, v] = p.edges[k];
                const double w = p.weights.size() == 1 ? p.weights[0] : p.weights[k];
                detail::require_not_raised(g.conductance(u, v), w, u, v);
                out.set_conductance(u, v, w);
            }
            break;
        }
        case ComparisonStep::duplicate_line: {
            if (p.line.empty()) throw std::invalid_argument("duplicate_line: empty line");
            if (!(p.epsilon > 0.0)) throw std::invalid_argument("duplicate_line: epsilon must be positive");
            // The copies are appended after the existing vertices; the cemetery
            // keeps its index.
            std::vector<int> copy;
            for (int u : p.line) {
                Coord c = g.coord(u);
                c.push_back(1);
                copy.push_back(out.add_vertex(g.vertex_class(u), 0.0, std::move(c)));
            }
            for (std::size_t i = 0; i + 1 < p.line.size(); ++i) {
                const int a = p.line[i], b = p.line[i + 1];
                if (g.conductance(a, b) <= 0.0) throw std::invalid_argument("duplicate_line: line is not a path");
                detail::require_not_raised(g.conductance(a, b), p.line_weight, a, b);
                out.set_conductance(a, b, p.line_weight);
                out.set_conductance(copy[i], copy[i + 1], p.epsilon);
            }
            for (std::size_t i = 0; i < p.line.size(); ++i)
                out.set_conductance(p.line[i], copy[i], p.cross_weight);
            if (p.end_cemetery_share > 0.0) {
                auto star = g.cemetery();
                if (!star) throw std::invalid_argument("duplicate_line: no cemetery for end share");
                std::vector<std::size_t> ends{0};
                if (p.line.size() > 1) ends.push_back(p.line.size() - 1);
                for (std::size_t e : ends) {
                    const double w = g.conductance(p.line[e], *star);
                    if (w < p.end_cemetery_share)
                        throw std::invalid_argument("duplicate_line: line end lacks cemetery conductance");
                    out.set_conductance(p.line[e], *star, w - p.end_cemetery_share);
                    out.add_conductance(copy[e], *star, p.end_cemetery_share);
                }
            }
            break;
        }
    }
    return out;
}

// ---------------------------------------------------------------- text format

namespace detail {

inline std::string format_double(double x) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s) {
    double x = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), x);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw std::invalid_argument("bad number '" + s + "'");
    return x;
}

}  // namespace detail

// graph <N> / v <id> <class> <eta> / e <id1> <id2> <conductance>
// plus an optional "root <id>" line. Numbers use the shortest representation
// that reads back to the same double.
inline void write_graph(std::ostream& os, const WeightedGraph& g) {
    os << "graph " << g.size() << '\n';
    for (std::size_t v = 0; v < g.size(); ++v)
        os << "v " << v << ' ' << to_string(g.vertex_class(static_cast<int>(v))) << ' '
           << detail::format_double(g.eta(static_cast<int>(v))) << '\n';
    if (g.root()) os << "root " << *g.root() << '\n';
    for (std::size_t v = 0; v < g.size(); ++v) {
        const int iv = static_cast<int>(v);
        if (g.self_loop(iv) > 0.0)
            os << "e " << v << ' ' << v << ' ' << detail::format_double(g.self_loop(iv)) << '\n';
        for (const auto& nb : g.neighbors(iv))
            if (nb.v > iv) os << "e " << v << ' ' << nb.v << ' ' << detail::format_double(nb.w) << '\n';
    }
}

// Reads a graph; "beta <id> <value>" lines, if present, are returned through
// beta (NaN where absent). Coordinates are not part of the format.
inline WeightedGraph read_graph(std::istream& is, std::vector<double>* beta = nullptr) {
    WeightedGraph g;
    std::string line;
    std::size_t expected = 0;
    bool header = false;
    int lineno = 0;
    std::vector<std::pair<int, double>> betas;
    while (std::getline(is, line)) {
        ++lineno;
        std::istringstream ss(line);
        std::string tag;
        if (!(ss >> tag) || tag[0] == '#') continue;
        auto fail = [&](const std::string& msg) {
            throw std::invalid_argument("graph line " + std::to_string(lineno) + ": " + msg);
        };
        auto num = [&](const std::string& x) {
            try {
                return detail::parse_double(x);
            } catch (const std::invalid_argument& e) {
                fail(e.what());
            }
            return 0.0;
        };
        if (tag == "graph") {
            if (!(ss >> expected)) fail("bad header");
            header = true;
        } else if (tag == "v") {
            std::size_t id;
            std::string cls, eta;
            if (!(ss >> id >> cls >> eta)) fail("bad vertex line");
            if (id != g.size()) fail("vertex ids must be consecutive from 0");
            g.add_vertex(parse_vertex_class(cls), num(eta));
        } else if (tag == "e") {
            int a, b;
            std::string w;
            if (!(ss >> a >> b >> w)) fail("bad edge line");
            g.add_conductance(a, b, num(w));
        } else if (tag == "root") {
            int r;
            if (!(ss >> r)) fail("bad root line");
            g.set_root(r);
        } else if (tag == "beta") {
            int id;
            std::string val;
            if (!(ss >> id >> val)) fail("bad beta line");
            betas.emplace_back(id, num(val));
        } else {
            fail("unknown record '" + tag + "'");
        }
    }
    if (!header || g.size() != expected) throw std::invalid_argument("graph header does not match vertex count");
    if (beta) {
        beta->assign(g.size(), std::nan(""));
        for (auto [id, val] : betas) beta->at(id) = val;
    }
    return g;
}

}  // namespace vrjp
