#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <iterator>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

namespace tfrac {

struct Point {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point&, const Point&) = default;
};

enum class Side { left, right, bottom, top };

inline std::string_view to_string(Side side) {
    switch (side) {
        case Side::left: return "left";
        case Side::right: return "right";
        case Side::bottom: return "bottom";
        case Side::top: return "top";
    }
    return "?";
}

inline Side parse_side(std::string_view name) {
    if (name == "left") return Side::left;
    if (name == "right") return Side::right;
    if (name == "bottom") return Side::bottom;
    if (name == "top") return Side::top;
    throw std::invalid_argument("unknown boundary side '" + std::string(name) + "'");
}

enum class EdgeOrientation { vertical, horizontal };

/// An edge of the rectangular grid carrying one lowest-order Raviart-Thomas dof.
///
/// Every edge has a fixed unit normal: (+1,0) for vertical edges, (0,+1) for
/// horizontal ones. `cells[0]` is the cell on the negative side of that normal
/// (left/below) and `cells[1]` the one on the positive side; -1 marks "outside".
struct Edge {
    Point a;
    Point b;
    EdgeOrientation orientation = EdgeOrientation::vertical;
    double length = 0.0;
    std::array<int, 2> cells{-1, -1};

    Point normal() const {
        return orientation == EdgeOrientation::vertical ? Point{1.0, 0.0} : Point{0.0, 1.0};
    }
    Point midpoint() const { return {0.5 * (a.x + b.x), 0.5 * (a.y + b.y)}; }
    bool on_boundary() const { return cells[0] < 0 || cells[1] < 0; }

    friend bool operator==(const Edge&, const Edge&) = default;
};

struct Cell {
    Point lower;
    Point upper;
    /// left, right, bottom, top
    std::array<int, 4> edges{};

    Point center() const { return {0.5 * (lower.x + upper.x), 0.5 * (lower.y + upper.y)}; }
    double area() const { return (upper.x - lower.x) * (upper.y - lower.y); }

    friend bool operator==(const Cell&, const Cell&) = default;
};

/// A boundary edge together with the sign relating its fixed normal to the
/// outward normal of the unit square (outward = sign * fixed normal).
struct BoundaryEdge {
    int edge = -1;
    int sign = 0;
    Side side = Side::left;

    friend bool operator==(const BoundaryEdge&, const BoundaryEdge&) = default;
};

/// Uniform nx-by-ny grid of the unit square.
///
/// Cells are numbered row-major from the lower-left corner (index j*nx + i).
/// Edges are numbered vertical first (index j*(nx+1) + i for the edge at
/// x = i*dx in row j), then horizontal (offset + j*nx + i for the edge at
/// y = j*dy in column i).
class Mesh {
public:
    Mesh(int nx, int ny) : nx_(nx), ny_(ny) {
        if (nx < 1 || ny < 1) {
            throw std::invalid_argument("mesh needs at least one cell per direction, got " +
                                        std::to_string(nx) + "x" + std::to_string(ny));
        }
        dx_ = 1.0 / nx;
        dy_ = 1.0 / ny;
        build();
    }

    int nx() const { return nx_; }
    int ny() const { return ny_; }
    double dx() const { return dx_; }
    double dy() const { return dy_; }

    std::size_t num_cells() const { return cells_.size(); }
    std::size_t num_edges() const { return edges_.size(); }
    std::size_t num_vertical_edges() const { return static_cast<std::size_t>((nx_ + 1) * ny_); }

    const std::vector<Cell>& cells() const { return cells_; }
    const std::vector<Edge>& edges() const { return edges_; }
    const Cell& cell(std::size_t index) const { return cells_.at(index); }
    const Edge& edge(std::size_t index) const { return edges_.at(index); }

    /// All boundary edges in increasing edge-index order.
    const std::vector<BoundaryEdge>& boundary_edges() const { return boundary_; }

    int cell_index(int i, int j) const { return j * nx_ + i; }
    int vertical_edge_index(int i, int j) const { return j * (nx_ + 1) + i; }
    int horizontal_edge_index(int i, int j) const {
        return static_cast<int>(num_vertical_edges()) + j * nx_ + i;
    }

    friend bool operator==(const Mesh&, const Mesh&) = default;

private:
    void build() {
        cells_.resize(static_cast<std::size_t>(nx_) * ny_);
        edges_.resize(num_vertical_edges() + static_cast<std::size_t>(nx_) * (ny_ + 1));

        for (int j = 0; j < ny_; ++j) {
            for (int i = 0; i <= nx_; ++i) {
                Edge& e = edges_[vertical_edge_index(i, j)];
                e.a = {i * dx_, j * dy_};
                e.b = {i * dx_, (j + 1) * dy_};
                e.orientation = EdgeOrientation::vertical;
                e.length = dy_;
                e.cells = {i > 0 ? cell_index(i - 1, j) : -1, i < nx_ ? cell_index(i, j) : -1};
            }
        }
        for (int j = 0; j <= ny_; ++j) {
            for (int i = 0; i < nx_; ++i) {
                Edge& e = edges_[horizontal_edge_index(i, j)];
                e.a = {i * dx_, j * dy_};
                e.b = {(i + 1) * dx_, j * dy_};
                e.orientation = EdgeOrientation::horizontal;
                e.length = dx_;
                e.cells = {j > 0 ? cell_index(i, j - 1) : -1, j < ny_ ? cell_index(i, j) : -1};
            }
        }
        for (int j = 0; j < ny_; ++j) {
            for (int i = 0; i < nx_; ++i) {
                Cell& c = cells_[cell_index(i, j)];
                c.lower = {i * dx_, j * dy_};
                c.upper = {(i + 1) * dx_, (j + 1) * dy_};
                c.edges = {vertical_edge_index(i, j), vertical_edge_index(i + 1, j),
                           horizontal_edge_index(i, j), horizontal_edge_index(i, j + 1)};
            }
        }

        for (std::size_t k = 0; k < edges_.size(); ++k) {
            const Edge& e = edges_[k];
            if (!e.on_boundary()) continue;
            BoundaryEdge be;
            be.edge = static_cast<int>(k);
            // outside on the negative side means the outward normal is -n
            be.sign = e.cells[0] < 0 ? -1 : +1;
            if (e.orientation == EdgeOrientation::vertical) {
                be.side = be.sign < 0 ? Side::left : Side::right;
            } else {
                be.side = be.sign < 0 ? Side::bottom : Side::top;
            }
            boundary_.push_back(be);
        }
    }

    int nx_;
    int ny_;
    double dx_ = 0.0;
    double dy_ = 0.0;
    std::vector<Cell> cells_;
    std::vector<Edge> edges_;
    std::vector<BoundaryEdge> boundary_;
};

inline Mesh build_mesh(int nx, int ny) { return Mesh(nx, ny); }

/// Where on the boundary flux measurements are read.
class BoundaryRegion {
public:
    struct Whole {};
    using Descriptor = std::variant<Whole, Side, std::vector<int>>;

    static BoundaryRegion whole() { return BoundaryRegion(Whole{}); }
    static BoundaryRegion side(Side s) { return BoundaryRegion(s); }
    static BoundaryRegion edge_set(std::vector<int> edges) {
        if (edges.empty()) throw std::invalid_argument("boundary region: empty edge set");
        return BoundaryRegion(std::move(edges));
    }
    /// "whole", "left", "right", "bottom", "top" or "edges:i,j,k".
    static BoundaryRegion parse(std::string_view name) {
        if (name == "whole" || name == "all") return whole();
        if (name.starts_with("edges:")) {
            std::vector<int> edges;
            std::string_view rest = name.substr(6);
            while (!rest.empty()) {
                const auto comma = rest.find(',');
                const std::string item(rest.substr(0, comma));
                try {
                    edges.push_back(std::stoi(item));
                } catch (const std::exception&) {
                    throw std::invalid_argument("bad edge index '" + item + "' in boundary region");
                }
                rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
            }
            return edge_set(std::move(edges));
        }
        return side(parse_side(name));
    }

    const Descriptor& descriptor() const { return descriptor_; }

    std::string describe() const {
        if (std::holds_alternative<Whole>(descriptor_)) return "whole";
        if (const auto* s = std::get_if<Side>(&descriptor_)) return std::string(to_string(*s));
        return "edges(" + std::to_string(std::get<std::vector<int>>(descriptor_).size()) + ")";
    }

private:
    explicit BoundaryRegion(Descriptor d) : descriptor_(std::move(d)) {}
    Descriptor descriptor_;
};

/// Boundary edges lying in `region`, sorted by edge index.
inline std::vector<BoundaryEdge> boundary_restriction(const Mesh& mesh, const BoundaryRegion& region) {
    const auto& all = mesh.boundary_edges();
    std::vector<BoundaryEdge> out;
    std::visit(
        [&](const auto& d) {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, BoundaryRegion::Whole>) {
                out = all;
            } else if constexpr (std::is_same_v<T, Side>) {
                std::copy_if(all.begin(), all.end(), std::back_inserter(out),
                             [&](const BoundaryEdge& be) { return be.side == d; });
            } else {
                if (d.empty()) throw std::invalid_argument("boundary region: empty edge set");
                std::vector<int> wanted = d;
                std::sort(wanted.begin(), wanted.end());
                wanted.erase(std::unique(wanted.begin(), wanted.end()), wanted.end());
                for (int idx : wanted) {
                    auto it = std::lower_bound(all.begin(), all.end(), idx,
                                               [](const BoundaryEdge& be, int v) { return be.edge < v; });
                    if (it == all.end() || it->edge != idx) {
                        throw std::invalid_argument("boundary region: edge " + std::to_string(idx) +
                                                    " is not a boundary edge");
                    }
                    out.push_back(*it);
                }
            }
        },
        region.descriptor());
    return out;
}

}  // namespace tfrac
