#include "radarfield/checkpoint.hpp"

#include "radarfield/detail/binary.hpp"

#include <fstream>
#include <iterator>

namespace radarfield {

namespace {

constexpr std::string_view kModelMagic = "RFMODEL\n";
constexpr std::uint32_t kModelVersion = 1;

void put_mlp(detail::ByteWriter& w, const Mlp& net) {
  const auto sizes = net.sizes();
  w.put<std::uint32_t>(static_cast<std::uint32_t>(sizes.size()));
  for (int s : sizes) w.put<std::uint32_t>(static_cast<std::uint32_t>(s));
  for (std::size_t i = 0; i < net.parameter_count(); ++i) w.put<float>(static_cast<float>(net.parameter(i)));
}

Mlp get_mlp(detail::ByteReader& r) {
  const auto n = r.get<std::uint32_t>();
  if (n < 2 || n > 64) throw DecodeError("checkpoint: bad layer count");
  std::vector<int> sizes;
  for (std::uint32_t i = 0; i < n; ++i) {
    const auto s = r.get<std::uint32_t>();
    if (s == 0 || s > 1u << 16) throw DecodeError("checkpoint: bad layer size");
    sizes.push_back(static_cast<int>(s));
  }
  Mlp net(sizes, 0);
  if (net.parameter_count() * 4 > r.remaining()) throw DecodeError("checkpoint: truncated parameters");
  for (std::size_t i = 0; i < net.parameter_count(); ++i) net.parameter(i) = static_cast<double>(r.get<float>());
  return net;
}

std::uint32_t flag(bool b) { return b ? 1u : 0u; }

}  // namespace

std::vector<std::uint8_t> serialize_networks(const ModelBundle& bundle) {
  const RadarField& m = bundle.model;
  const ModelConfig& c = m.config();
  detail::ByteWriter w;
  w.put_bytes(kModelMagic);
  w.put<std::uint32_t>(kModelVersion);
  for (int a = 0; a < 3; ++a) w.put<double>(m.scene().min[a]);
  for (int a = 0; a < 3; ++a) w.put<double>(m.scene().max[a]);
  w.put<double>(bundle.intensity_range.min);
  w.put<double>(bundle.intensity_range.max);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(c.fourier.num_frequencies));
  w.put<double>(c.fourier.base_frequency);
  w.put<std::uint32_t>(flag(c.fourier.include_input));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(c.sh.degree));
  w.put<std::uint32_t>(flag(c.net.geo_feature));
  w.put<std::uint32_t>(flag(c.net.normals));
  w.put<std::uint32_t>(flag(c.net.sdf_to_intensity));
  w.put<std::uint32_t>(flag(c.net.intensity_grad_to_sdf));
  put_mlp(w, m.sdf_net());
  put_mlp(w, m.intensity_net());
  return w.take();
}

ModelBundle deserialize_model(std::span<const std::uint8_t> networks, std::span<const std::uint8_t> grid_bytes) {
  detail::ByteReader r(networks);
  r.expect(kModelMagic, "checkpoint");
  const auto version = r.get<std::uint32_t>();
  if (version != kModelVersion) throw DecodeError("checkpoint: unsupported version " + std::to_string(version));
  Vec3 lo, hi;
  for (int a = 0; a < 3; ++a) lo[a] = r.get<double>();
  for (int a = 0; a < 3; ++a) hi[a] = r.get<double>();
  if (!(lo.array() <= hi.array()).all()) throw DecodeError("checkpoint: invalid scene box");
  IntensityRange range;
  range.min = r.get<double>();
  range.max = r.get<double>();
  ModelConfig cfg;
  cfg.fourier.num_frequencies = static_cast<int>(r.get<std::uint32_t>());
  cfg.fourier.base_frequency = r.get<double>();
  cfg.fourier.include_input = r.get<std::uint32_t>() != 0;
  cfg.sh.degree = static_cast<int>(r.get<std::uint32_t>());
  cfg.net.geo_feature = r.get<std::uint32_t>() != 0;
  cfg.net.normals = r.get<std::uint32_t>() != 0;
  cfg.net.sdf_to_intensity = r.get<std::uint32_t>() != 0;
  cfg.net.intensity_grad_to_sdf = r.get<std::uint32_t>() != 0;
  Mlp sdf = get_mlp(r);
  Mlp intensity = get_mlp(r);
  if (!r.at_end()) throw DecodeError("checkpoint: trailing bytes");

  TriQuadtreeGrid grid = TriQuadtreeGrid::deserialize(grid_bytes);
  cfg.grid = grid.config();
  cfg.net.sdf_layers = static_cast<int>(sdf.layers().size()) - 1;
  cfg.net.sdf_hidden = cfg.net.sdf_layers > 0 ? sdf.layers().front().out() : 1;
  cfg.net.intensity_layers = static_cast<int>(intensity.layers().size()) - 1;
  cfg.net.intensity_hidden = cfg.net.intensity_layers > 0 ? intensity.layers().front().out() : 1;
  try {
    return {RadarField(Aabb(lo, hi), cfg, std::move(grid), std::move(sdf), std::move(intensity)), range};
  } catch (const std::invalid_argument& e) {
    throw DecodeError(std::string("checkpoint: ") + e.what());
  }
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

SavedModel save_model(const std::filesystem::path& dir, const ModelBundle& bundle) {
  SavedModel saved{dir / "model.ckpt", dir / "map.grid"};
  const auto nets = serialize_networks(bundle);
  const auto grid = bundle.model.grid().serialize();
  write_bytes(saved.checkpoint, nets);
  write_bytes(saved.grid, grid);
  saved.checkpoint_bytes = nets.size();
  saved.grid_bytes = grid.size();
  return saved;
}

ModelBundle load_model(const std::filesystem::path& dir) {
  return deserialize_model(read_bytes(dir / "model.ckpt"), read_bytes(dir / "map.grid"));
}

}  // namespace radarfield
