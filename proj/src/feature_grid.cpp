#include "radarfield/feature_grid.hpp"

#include "radarfield/detail/binary.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace radarfield {

namespace {

constexpr std::string_view kGridMagic = "RFGRID\r\n";

// Plane axes in world coordinates: XY -> (x, y), YZ -> (y, z), XZ -> (x, z).
constexpr std::array<std::array<int, 2>, 3> kPlaneAxes{{{0, 1}, {1, 2}, {0, 2}}};

}  // namespace

void GridConfig::validate() const {
  if (!(leaf_resolution > 0.0)) throw std::invalid_argument("grid: leaf_resolution must be positive");
  if (levels < 1 || levels > 16) throw std::invalid_argument("grid: levels must be in [1, 16]");
  if (feature_dim < 1) throw std::invalid_argument("grid: feature_dim must be >= 1");
  if (!(init_range >= 0.0)) throw std::invalid_argument("grid: init_range must be >= 0");
}

TriQuadtreeGrid::TriQuadtreeGrid(const Aabb& scene, const GridConfig& cfg) : scene_(scene), cfg_(cfg) {
  cfg_.validate();
  if (!scene_.valid()) throw std::invalid_argument("grid: invalid scene box");
  tables_.resize(3 * static_cast<std::size_t>(cfg_.levels));
  for (std::size_t t = 0; t < tables_.size(); ++t) tables_[t].index = SpatialHashTable(splitmix64(0x51ed270b27u + t));
}

double TriQuadtreeGrid::cell_size(int level) const {
  return cfg_.leaf_resolution * std::ldexp(1.0, cfg_.levels - 1 - level);
}

std::size_t TriQuadtreeGrid::output_offset(std::size_t table) const {
  return cfg_.concat_planes ? static_cast<std::size_t>(plane_of(table)) * static_cast<std::size_t>(cfg_.feature_dim)
                            : 0;
}

bool TriQuadtreeGrid::locate(const Vec3& x, std::span<Contribution> contrib) const {
  const Vec3 p = scene_.clamp(x);
  std::array<bool, 3> inside{};
  bool clamped = false;
  for (int a = 0; a < 3; ++a) {
    inside[a] = p[a] == x[a];
    clamped = clamped || !inside[a];
  }
  std::size_t c = 0;
  for (int plane = 0; plane < 3; ++plane) {
    const int ax = kPlaneAxes[plane][0];
    const int ay = kPlaneAxes[plane][1];
    for (int level = 0; level < cfg_.levels; ++level) {
      const std::size_t table = table_index(static_cast<Plane>(plane), level, cfg_.levels);
      const double cell = cell_size(level);
      const double u = (p[ax] - scene_.min[ax]) / cell;
      const double v = (p[ay] - scene_.min[ay]) / cell;
      const double iu = std::floor(u);
      const double iv = std::floor(v);
      const double fu = u - iu;
      const double fv = v - iv;
      const auto i0 = static_cast<std::int32_t>(iu);
      const auto j0 = static_cast<std::int32_t>(iv);
      const double du = inside[ax] ? 1.0 / cell : 0.0;
      const double dv = inside[ay] ? 1.0 / cell : 0.0;
      const std::array<std::int32_t, 4> ci{i0, i0 + 1, i0, i0 + 1};
      const std::array<std::int32_t, 4> cj{j0, j0, j0 + 1, j0 + 1};
      const std::array<double, 4> w{(1 - fu) * (1 - fv), fu * (1 - fv), (1 - fu) * fv, fu * fv};
      const std::array<double, 4> dwu{-(1 - fv) * du, (1 - fv) * du, -fv * du, fv * du};
      const std::array<double, 4> dwv{-(1 - fu) * dv, -fu * dv, (1 - fu) * dv, fu * dv};
      for (int k = 0; k < 4; ++k) {
        Contribution& out = contrib[c++];
        out.table = static_cast<std::uint32_t>(table);
        out.key = SpatialHashTable::pack(ci[k], cj[k]);
        out.slot = tables_[table].index.find(out.key);
        out.weight = w[k];
        out.dweight = {0.0, 0.0, 0.0};
        out.dweight[ax] = dwu[k];
        out.dweight[ay] = dwv[k];
      }
    }
  }
  return clamped;
}

void TriQuadtreeGrid::interpolate(std::span<const Contribution> contrib, std::span<double> feature) const {
  std::fill(feature.begin(), feature.end(), 0.0);
  const auto F = static_cast<std::size_t>(cfg_.feature_dim);
  for (const auto& c : contrib) {
    if (c.slot == SpatialHashTable::kMissing || c.weight == 0.0) continue;
    const double* f = tables_[c.table].values.data() + c.slot * F;
    double* out = feature.data() + output_offset(c.table);
    for (std::size_t k = 0; k < F; ++k) out[k] += c.weight * f[k];
  }
}

void TriQuadtreeGrid::interpolate_jacobian(std::span<const Contribution> contrib, std::span<double> jacobian) const {
  std::fill(jacobian.begin(), jacobian.end(), 0.0);
  const auto F = static_cast<std::size_t>(cfg_.feature_dim);
  const auto D = static_cast<std::size_t>(output_dim());
  for (const auto& c : contrib) {
    if (c.slot == SpatialHashTable::kMissing) continue;
    const double* f = tables_[c.table].values.data() + c.slot * F;
    const std::size_t off = output_offset(c.table);
    for (int a = 0; a < 3; ++a) {
      if (c.dweight[a] == 0.0) continue;
      double* col = jacobian.data() + static_cast<std::size_t>(a) * D + off;
      for (std::size_t k = 0; k < F; ++k) col[k] += c.dweight[a] * f[k];
    }
  }
}

double TriQuadtreeGrid::initial_value(std::size_t table, std::uint64_t key, int component) const {
  std::uint64_t h = splitmix64(cfg_.seed ^ 0xa5a5a5a5u);
  h = splitmix64(h ^ table);
  h = splitmix64(h ^ key);
  h = splitmix64(h ^ static_cast<std::uint64_t>(component));
  const double unit = static_cast<double>(h >> 11) * 0x1.0p-53;  // [0, 1)
  return (2.0 * unit - 1.0) * cfg_.init_range;
}

std::uint32_t TriQuadtreeGrid::create(std::size_t table, std::uint64_t key) {
  FeatureTable& t = tables_[table];
  auto [slot, inserted] = t.index.insert(key);
  if (inserted) {
    for (int k = 0; k < cfg_.feature_dim; ++k) t.values.push_back(initial_value(table, key, k));
    t.grad.resize(t.values.size(), 0.0);
    t.adam_m.resize(t.values.size(), 0.0);
    t.adam_v.resize(t.values.size(), 0.0);
  }
  return slot;
}

void TriQuadtreeGrid::materialize(std::span<Contribution> contrib) {
  for (auto& c : contrib)
    if (c.slot == SpatialHashTable::kMissing) c.slot = create(c.table, c.key);
}

void TriQuadtreeGrid::materialize(const Vec3& x) {
  std::vector<Contribution> contrib(contributions_per_query());
  locate(x, contrib);
  materialize(contrib);
}

FeatureQueryResult TriQuadtreeGrid::query(const Vec3& x) const {
  FeatureQueryResult r;
  r.contributions.resize(contributions_per_query());
  r.clamped = locate(x, r.contributions);
  r.feature = Eigen::VectorXd::Zero(output_dim());
  interpolate(r.contributions, {r.feature.data(), static_cast<std::size_t>(r.feature.size())});
  return r;
}

FeatureQueryResult TriQuadtreeGrid::query_train(const Vec3& x) {
  FeatureQueryResult r;
  r.contributions.resize(contributions_per_query());
  r.clamped = locate(x, r.contributions);
  materialize(r.contributions);
  r.feature = Eigen::VectorXd::Zero(output_dim());
  interpolate(r.contributions, {r.feature.data(), static_cast<std::size_t>(r.feature.size())});
  return r;
}

void TriQuadtreeGrid::scatter_gradient(const FeatureQueryResult& result, std::span<const double> upstream) {
  scatter_gradient(result.contributions, upstream, {});
}

void TriQuadtreeGrid::scatter_gradient(std::span<const Contribution> contrib, std::span<const double> upstream,
                                       std::span<const double> upstream_jacobian) {
  if (upstream.size() != static_cast<std::size_t>(output_dim()))
    throw std::invalid_argument("scatter_gradient: upstream gradient has wrong length");
  const auto F = static_cast<std::size_t>(cfg_.feature_dim);
  const auto D = static_cast<std::size_t>(output_dim());
  const bool with_jacobian = !upstream_jacobian.empty();
  for (const auto& c : contrib) {
    FeatureTable& t = tables_[c.table];
    if (c.slot == SpatialHashTable::kMissing || c.slot >= t.index.size() || t.index.key_of(c.slot) != c.key)
      throw std::logic_error("scatter_gradient: feature vertex missing from hash table");
    double* g = t.grad.data() + c.slot * F;
    const std::size_t off = output_offset(c.table);
    for (std::size_t k = 0; k < F; ++k) g[k] += c.weight * upstream[off + k];
    if (with_jacobian) {
      for (int a = 0; a < 3; ++a) {
        if (c.dweight[a] == 0.0) continue;
        const double* col = upstream_jacobian.data() + static_cast<std::size_t>(a) * D + off;
        for (std::size_t k = 0; k < F; ++k) g[k] += c.dweight[a] * col[k];
      }
    }
  }
}

void TriQuadtreeGrid::zero_grad() {
  for (auto& t : tables_) std::fill(t.grad.begin(), t.grad.end(), 0.0);
}

void TriQuadtreeGrid::adam_step(const AdamConfig& cfg, long step) {
  for (auto& t : tables_) adam_update(t.values, t.grad, t.adam_m, t.adam_v, cfg, step);
  zero_grad();
}

std::size_t TriQuadtreeGrid::entry_count() const {
  std::size_t n = 0;
  for (const auto& t : tables_) n += t.index.size();
  return n;
}

std::vector<std::uint8_t> TriQuadtreeGrid::serialize() const {
  detail::ByteWriter w;
  w.put_bytes(kGridMagic);
  w.put<std::uint32_t>(kFormatVersion);
  for (int a = 0; a < 3; ++a) w.put<double>(scene_.min[a]);
  for (int a = 0; a < 3; ++a) w.put<double>(scene_.max[a]);
  w.put<double>(cfg_.leaf_resolution);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(cfg_.levels));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(cfg_.feature_dim));
  w.put<std::uint32_t>(cfg_.concat_planes ? 1u : 0u);
  w.put<double>(cfg_.init_range);
  w.put<std::uint64_t>(cfg_.seed);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(tables_.size()));
  const auto F = static_cast<std::size_t>(cfg_.feature_dim);
  for (const auto& t : tables_) {
    w.put<std::uint64_t>(t.index.size());
    std::vector<std::uint32_t> order(t.index.size());
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(),
              [&](std::uint32_t a, std::uint32_t b) { return t.index.key_of(a) < t.index.key_of(b); });
    for (auto slot : order) {
      w.put<std::uint64_t>(t.index.key_of(slot));
      for (std::size_t k = 0; k < F; ++k) w.put<float>(static_cast<float>(t.values[slot * F + k]));
    }
  }
  return w.take();
}

TriQuadtreeGrid TriQuadtreeGrid::deserialize(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes);
  r.expect(kGridMagic, "feature grid");
  const auto version = r.get<std::uint32_t>();
  if (version != kFormatVersion)
    throw DecodeError("feature grid: unsupported version " + std::to_string(version));
  Vec3 lo, hi;
  for (int a = 0; a < 3; ++a) lo[a] = r.get<double>();
  for (int a = 0; a < 3; ++a) hi[a] = r.get<double>();
  GridConfig cfg;
  cfg.leaf_resolution = r.get<double>();
  cfg.levels = static_cast<int>(r.get<std::uint32_t>());
  cfg.feature_dim = static_cast<int>(r.get<std::uint32_t>());
  cfg.concat_planes = r.get<std::uint32_t>() != 0;
  cfg.init_range = r.get<double>();
  cfg.seed = r.get<std::uint64_t>();
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw DecodeError(std::string("feature grid: ") + e.what());
  }
  if (!(lo.array() <= hi.array()).all()) throw DecodeError("feature grid: invalid scene box");
  TriQuadtreeGrid grid(Aabb(lo, hi), cfg);
  const auto tables = r.get<std::uint32_t>();
  if (tables != grid.tables_.size()) throw DecodeError("feature grid: table count does not match config");
  const auto F = static_cast<std::size_t>(cfg.feature_dim);
  for (auto& t : grid.tables_) {
    const auto n = r.get<std::uint64_t>();
    if (n > r.remaining() / (8 + 4 * F)) throw DecodeError("feature grid: truncated entry list");
    t.values.reserve(n * F);
    for (std::uint64_t e = 0; e < n; ++e) {
      const auto key = r.get<std::uint64_t>();
      if (!t.index.insert(key).second) throw DecodeError("feature grid: duplicate key");
      for (std::size_t k = 0; k < F; ++k) t.values.push_back(static_cast<double>(r.get<float>()));
    }
    t.grad.assign(t.values.size(), 0.0);
    t.adam_m.assign(t.values.size(), 0.0);
    t.adam_v.assign(t.values.size(), 0.0);
  }
  if (!r.at_end()) throw DecodeError("feature grid: trailing bytes");
  return grid;
}

}  // namespace radarfield
