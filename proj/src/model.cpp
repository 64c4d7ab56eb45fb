#include "radarfield/model.hpp"

#include <cmath>
#include <exception>
#include <stdexcept>

namespace radarfield {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void NetworkConfig::validate() const {
  if (sdf_hidden < 1 || intensity_hidden < 1) throw std::invalid_argument("network: hidden width must be >= 1");
  if (sdf_layers < 0 || intensity_layers < 0) throw std::invalid_argument("network: layer count must be >= 0");
}

void ModelConfig::validate() const {
  fourier.validate();
  sh.validate();
  grid.validate();
  net.validate();
}

Ablation parse_ablation(const std::string& name) {
  if (name.empty() || name == "none") return Ablation::None;
  if (name == "no-sdf") return Ablation::NoSdf;
  if (name == "no-normals") return Ablation::NoNormals;
  if (name == "no-geofeature") return Ablation::NoGeoFeature;
  throw std::invalid_argument("unknown ablation '" + name + "' (expected none|no-sdf|no-normals|no-geofeature)");
}

std::string to_string(Ablation a) {
  switch (a) {
    case Ablation::None: return "none";
    case Ablation::NoSdf: return "no-sdf";
    case Ablation::NoNormals: return "no-normals";
    case Ablation::NoGeoFeature: return "no-geofeature";
  }
  return "none";
}

void apply_ablation(ModelConfig& cfg, Ablation a) {
  switch (a) {
    case Ablation::None: break;
    case Ablation::NoSdf: cfg.net.sdf_to_intensity = false; break;
    case Ablation::NoNormals: cfg.net.normals = false; break;
    case Ablation::NoGeoFeature: cfg.net.geo_feature = false; break;
  }
}

Vec3 ForwardRecord::normal(Eigen::Index j) const {
  if (!has_normals) throw std::logic_error("ForwardRecord: normals were not computed");
  return {sdf_tangent_out(0, j), sdf_tangent_out(0, batch + j), sdf_tangent_out(0, 2 * batch + j)};
}

namespace {

std::vector<int> layer_sizes(int in, int hidden, int layers, int out) {
  std::vector<int> s{in};
  for (int l = 0; l < layers; ++l) s.push_back(hidden);
  s.push_back(out);
  return s;
}

}  // namespace

RadarField::RadarField(const Aabb& scene, const ModelConfig& cfg, std::uint64_t seed) : scene_(scene), cfg_(cfg) {
  cfg_.validate();
  cfg_.grid.seed = seed;
  center_ = scene_.center();
  half_extent_ = 0.5 * scene_.extent().maxCoeff();
  if (!(half_extent_ > 0.0)) throw std::invalid_argument("RadarField: scene box has zero extent");
  grid_ = TriQuadtreeGrid(scene_, cfg_.grid);
  sdf_net_ = Mlp(layer_sizes(sdf_input_dim(), cfg_.net.sdf_hidden, cfg_.net.sdf_layers, sdf_output_dim()),
                 seed * 2 + 1);
  intensity_net_ = Mlp(
      layer_sizes(intensity_input_dim(), cfg_.net.intensity_hidden, cfg_.net.intensity_layers, 1), seed * 2 + 2);
}

RadarField::RadarField(const Aabb& scene, const ModelConfig& cfg, TriQuadtreeGrid grid, Mlp sdf_net,
                       Mlp intensity_net)
    : scene_(scene), cfg_(cfg), grid_(std::move(grid)), sdf_net_(std::move(sdf_net)),
      intensity_net_(std::move(intensity_net)) {
  cfg_.validate();
  center_ = scene_.center();
  half_extent_ = 0.5 * scene_.extent().maxCoeff();
  if (sdf_net_.input_dim() != sdf_input_dim() || sdf_net_.output_dim() != sdf_output_dim())
    throw std::invalid_argument("RadarField: SDF network shape does not match config");
  if (intensity_net_.input_dim() != intensity_input_dim() || intensity_net_.output_dim() != 1)
    throw std::invalid_argument("RadarField: intensity network shape does not match config");
}

int RadarField::sdf_feature_dim() const {
  if (!cfg_.net.sdf_to_intensity) return 0;
  return 1 + (emits_geo_feature() ? NetworkConfig::kGeoFeatureDim : 0) + (intensity_needs_normals() ? 3 : 0);
}

int RadarField::intensity_input_dim() const {
  return cfg_.fourier.output_dim() + cfg_.sh.output_dim() + sdf_feature_dim();
}

void RadarField::forward(std::span<const Vec3> x, std::span<const Vec3> dirs, const ForwardOptions& options,
                         ForwardRecord& rec) const {
  const auto B = static_cast<Eigen::Index>(x.size());
  if (options.intensity && dirs.size() != x.size())
    throw std::invalid_argument("RadarField::forward: positions and directions differ in length");
  rec.batch = B;
  rec.pending = true;
  rec.has_intensity = false;

  const int Fg = grid_.output_dim();
  const int Ff = cfg_.fourier.output_dim();
  const bool needs_sdf_features = options.intensity && cfg_.net.sdf_to_intensity;
  const bool need_normals = options.normals || (needs_sdf_features && intensity_needs_normals());

  if (options.sdf_features == nullptr) {
    const std::size_t C = grid_.contributions_per_query();
    const int Din = sdf_input_dim();
    rec.contributions.resize(static_cast<std::size_t>(B) * C);
    rec.sdf_input.resize(Din, B);
    if (need_normals) rec.sdf_tangent_in.setZero(Din, 3 * B);
    std::vector<double> jac(static_cast<std::size_t>(Fg) * 3);
    std::vector<double> dfour(static_cast<std::size_t>(Ff));
    std::vector<int> axis(static_cast<std::size_t>(Ff));
    for (Eigen::Index j = 0; j < B; ++j) {
      std::span<Contribution> contrib(rec.contributions.data() + static_cast<std::size_t>(j) * C, C);
      grid_.locate(x[j], contrib);
      double* col = rec.sdf_input.col(j).data();
      grid_.interpolate(contrib, {col, static_cast<std::size_t>(Fg)});
      const Vec3 u = normalize(x[j]);
      fourier_encode(u, cfg_.fourier, {col + Fg, static_cast<std::size_t>(Ff)});
      if (need_normals) {
        grid_.interpolate_jacobian(contrib, jac);
        for (int k = 0; k < 3; ++k)
          for (int r = 0; r < Fg; ++r) rec.sdf_tangent_in(r, k * B + j) = jac[static_cast<std::size_t>(k * Fg + r)];
        fourier_encode_derivative(u, cfg_.fourier, dfour, axis);
        for (int s = 0; s < Ff; ++s) rec.sdf_tangent_in(Fg + s, axis[s] * B + j) = dfour[s] / half_extent_;
      }
    }
    rec.sdf_output = sdf_net_.forward(rec.sdf_input, &rec.sdf_cache);
    if (need_normals) rec.sdf_tangent_out = sdf_net_.forward_tangent(rec.sdf_tangent_in, rec.sdf_cache);
    rec.sdf_from_network = true;
    rec.has_normals = need_normals;
  } else {
    const Eigen::MatrixXd& f = *options.sdf_features;
    if (f.cols() != B || f.rows() != sdf_feature_dim())
      throw std::invalid_argument("RadarField::forward: precomputed SDF features have wrong shape");
    const int rows = f.rows() == 0 ? 0 : sdf_output_dim();
    rec.sdf_output = f.topRows(rows);
    rec.has_normals = rows > 0 && intensity_needs_normals();
    if (rec.has_normals) {
      rec.sdf_tangent_out.resize(1, 3 * B);
      for (int k = 0; k < 3; ++k) rec.sdf_tangent_out.block(0, k * B, 1, B) = f.row(rows + k);
    }
    rec.sdf_from_network = false;
  }

  if (!options.intensity) return;
  const int S = cfg_.sh.output_dim();
  rec.intensity_input.resize(intensity_input_dim(), B);
  for (Eigen::Index j = 0; j < B; ++j) {
    double* col = rec.intensity_input.col(j).data();
    fourier_encode(normalize(x[j]), cfg_.fourier, {col, static_cast<std::size_t>(Ff)});
    sh_encode(dirs[j], cfg_.sh, {col + Ff, static_cast<std::size_t>(S)});
  }
  if (needs_sdf_features) {
    const int off = Ff + S;
    const int out_rows = sdf_output_dim();
    rec.intensity_input.middleRows(off, out_rows) = rec.sdf_output;
    if (intensity_needs_normals())
      for (int k = 0; k < 3; ++k)
        rec.intensity_input.row(off + out_rows + k) = rec.sdf_tangent_out.block(0, k * B, 1, B);
  }
  const Eigen::MatrixXd logits = intensity_net_.forward(rec.intensity_input, &rec.intensity_cache);
  rec.intensity.resize(B);
  for (Eigen::Index j = 0; j < B; ++j) rec.intensity[j] = sigmoid(logits(0, j));
  rec.has_intensity = true;
}

void RadarField::backward(ForwardRecord& rec, std::span<const double> dloss_dd, std::span<const double> dloss_di,
                          const BackwardOptions& options) {
  if (!rec.pending) throw std::logic_error("RadarField::backward: called twice without a new forward pass");
  rec.pending = false;
  const Eigen::Index B = rec.batch;
  const int Ff = cfg_.fourier.output_dim();
  const int S = cfg_.sh.output_dim();
  const bool flow = options.sdf && rec.sdf_from_network && rec.has_intensity && cfg_.net.sdf_to_intensity &&
                    cfg_.net.intensity_grad_to_sdf;

  Eigen::MatrixXd dXi;
  if (rec.has_intensity) {
    Eigen::MatrixXd dlogit = Eigen::MatrixXd::Zero(1, B);
    if (!dloss_di.empty())
      for (Eigen::Index j = 0; j < B; ++j) {
        const double i = rec.intensity[j];
        dlogit(0, j) = dloss_di[static_cast<std::size_t>(j)] * i * (1.0 - i);
      }
    if (options.intensity || flow)
      dXi = intensity_net_.backward(dlogit, nullptr, rec.intensity_cache, nullptr, options.intensity);
    else
      rec.intensity_cache.pending = false;
  }

  if (!rec.sdf_from_network) return;
  if (!options.sdf) {
    rec.sdf_cache.pending = false;
    return;
  }
  const int out_rows = sdf_output_dim();
  Eigen::MatrixXd dY = Eigen::MatrixXd::Zero(out_rows, B);
  if (!dloss_dd.empty())
    for (Eigen::Index j = 0; j < B; ++j) dY(0, j) = dloss_dd[static_cast<std::size_t>(j)];
  Eigen::MatrixXd dTout;
  const bool normal_grad = flow && intensity_needs_normals() && rec.has_normals;
  if (flow) {
    const int off = Ff + S;
    dY += dXi.middleRows(off, out_rows);
    if (normal_grad) {
      dTout = Eigen::MatrixXd::Zero(out_rows, 3 * B);
      for (int k = 0; k < 3; ++k) dTout.block(0, k * B, 1, B) = dXi.row(off + out_rows + k);
    }
  }
  Eigen::MatrixXd dT0;
  const Eigen::MatrixXd dXs = sdf_net_.backward(dY, normal_grad ? &dTout : nullptr, rec.sdf_cache, &dT0);

  const int Fg = grid_.output_dim();
  const std::size_t C = grid_.contributions_per_query();
  std::vector<double> upstream(static_cast<std::size_t>(Fg));
  std::vector<double> upstream_jac;
  if (dT0.size() > 0) upstream_jac.resize(static_cast<std::size_t>(Fg) * 3);
  for (Eigen::Index j = 0; j < B; ++j) {
    for (int r = 0; r < Fg; ++r) upstream[r] = dXs(r, j);
    if (!upstream_jac.empty())
      for (int k = 0; k < 3; ++k)
        for (int r = 0; r < Fg; ++r) upstream_jac[static_cast<std::size_t>(k * Fg + r)] = dT0(r, k * B + j);
    grid_.scatter_gradient({rec.contributions.data() + static_cast<std::size_t>(j) * C, C}, upstream, upstream_jac);
  }
}

Eigen::MatrixXd RadarField::sdf_features(const ForwardRecord& rec) const {
  const Eigen::Index B = rec.batch;
  Eigen::MatrixXd f(sdf_feature_dim(), B);
  if (f.rows() == 0) return f;
  const int rows = sdf_output_dim();
  f.topRows(rows) = rec.sdf_output.topRows(rows);
  if (intensity_needs_normals())
    for (int k = 0; k < 3; ++k) f.row(rows + k) = rec.sdf_tangent_out.block(0, k * B, 1, B);
  return f;
}

SdfOutput RadarField::sdf_forward(const Vec3& x, bool with_features) const {
  ForwardRecord rec;
  ForwardOptions opt;
  opt.intensity = false;
  opt.normals = with_features;
  forward({&x, 1}, {}, opt, rec);
  SdfOutput out;
  out.d = rec.d(0);
  if (with_features) {
    if (emits_geo_feature()) out.g = rec.sdf_output.col(0).tail(NetworkConfig::kGeoFeatureDim);
    out.n = rec.normal(0);
  }
  return out;
}

IntensityOutput RadarField::intensity_forward(const Vec3& x, const Vec3& v, const SdfOutput& sdf) const {
  Eigen::MatrixXd features(sdf_feature_dim(), 1);
  if (features.rows() > 0) {
    features(0, 0) = sdf.d;
    int row = 1;
    if (emits_geo_feature()) {
      if (!sdf.g) throw std::invalid_argument("intensity_forward: geometry feature required by config");
      features.block(row, 0, NetworkConfig::kGeoFeatureDim, 1) = *sdf.g;
      row += NetworkConfig::kGeoFeatureDim;
    }
    if (intensity_needs_normals()) {
      if (!sdf.n) throw std::invalid_argument("intensity_forward: SDF normal required by config");
      features.block(row, 0, 3, 1) = *sdf.n;
    }
  }
  ForwardRecord rec;
  ForwardOptions opt;
  opt.sdf_features = &features;
  forward({&x, 1}, {&v, 1}, opt, rec);
  return {rec.intensity[0]};
}

namespace {

template <typename Fn>
void for_each_chunk(std::size_t n, std::size_t chunk, Fn&& fn) {
  const auto chunks = static_cast<long>((n + chunk - 1) / chunk);
  std::exception_ptr error;
#pragma omp parallel for schedule(static)
  for (long c = 0; c < chunks; ++c) {
    try {
      const std::size_t begin = static_cast<std::size_t>(c) * chunk;
      fn(begin, std::min(n, begin + chunk));
    } catch (...) {
#pragma omp critical
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace

void RadarField::evaluate_sdf(std::span<const Vec3> x, std::span<double> d, std::span<Vec3> normals) const {
  const bool want_normals = !normals.empty();
  for_each_chunk(x.size(), kEvalChunk, [&](std::size_t begin, std::size_t end) {
    ForwardRecord rec;
    ForwardOptions opt;
    opt.intensity = false;
    opt.normals = want_normals;
    forward(x.subspan(begin, end - begin), {}, opt, rec);
    for (std::size_t i = begin; i < end; ++i) {
      d[i] = rec.d(static_cast<Eigen::Index>(i - begin));
      if (want_normals) normals[i] = rec.normal(static_cast<Eigen::Index>(i - begin));
    }
  });
}

void RadarField::evaluate_sdf_serial(std::span<const Vec3> x, std::span<double> d, std::span<Vec3> normals) const {
  const bool want_normals = !normals.empty();
  for (std::size_t begin = 0; begin < x.size(); begin += kEvalChunk) {
    const std::size_t end = std::min(x.size(), begin + kEvalChunk);
    ForwardRecord rec;
    ForwardOptions opt;
    opt.intensity = false;
    opt.normals = want_normals;
    forward(x.subspan(begin, end - begin), {}, opt, rec);
    for (std::size_t i = begin; i < end; ++i) {
      d[i] = rec.d(static_cast<Eigen::Index>(i - begin));
      if (want_normals) normals[i] = rec.normal(static_cast<Eigen::Index>(i - begin));
    }
  }
}

void RadarField::evaluate_intensity(std::span<const Vec3> x, std::span<const Vec3> dirs, std::span<double> out) const {
  if (dirs.size() != x.size() || out.size() != x.size())
    throw std::invalid_argument("evaluate_intensity: size mismatch");
  for_each_chunk(x.size(), kEvalChunk, [&](std::size_t begin, std::size_t end) {
    ForwardRecord rec;
    ForwardOptions opt;
    forward(x.subspan(begin, end - begin), dirs.subspan(begin, end - begin), opt, rec);
    for (std::size_t i = begin; i < end; ++i) out[i] = rec.intensity[static_cast<Eigen::Index>(i - begin)];
  });
}

void RadarField::zero_grad() {
  grid_.zero_grad();
  sdf_net_.zero_grad();
  intensity_net_.zero_grad();
}

bool RadarField::all_finite() const {
  if (!sdf_net_.all_finite() || !intensity_net_.all_finite()) return false;
  for (std::size_t t = 0; t < grid_.table_count(); ++t)
    for (double v : grid_.table(t).values)
      if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace radarfield
