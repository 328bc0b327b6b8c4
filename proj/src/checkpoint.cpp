#include "lung/checkpoint.hpp"

#include <fstream>

#include "lung/binary_io.hpp"

namespace lung {
namespace {

constexpr char kMagic[4] = {'L', 'S', 'N', 'N'};
constexpr std::uint8_t kDtypeF32 = 1;

}  // namespace

nlohmann::json architecture_to_json(const Architecture& arch) {
  return {{"input_height", arch.input_height},
          {"input_width", arch.input_width},
          {"channels", arch.channels},
          {"dropout_rate", arch.dropout_rate}};
}

Architecture architecture_from_json(const nlohmann::json& j) {
  Architecture arch;
  arch.input_height = j.at("input_height").get<std::size_t>();
  arch.input_width = j.at("input_width").get<std::size_t>();
  arch.channels = j.at("channels").get<std::vector<std::size_t>>();
  arch.dropout_rate = j.at("dropout_rate").get<double>();
  arch.validate();
  return arch;
}

void save_checkpoint(const std::filesystem::path& path, const ModelParams<float>& params,
                     nlohmann::json metadata) {
  using binary::put;
  metadata["architecture"] = architecture_to_json(params.arch);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out.write(kMagic, 4);
  put(out, kCheckpointVersion);
  const auto names = ModelParams<float>::tensor_names(params.arch);
  const auto tensors = params.tensors();
  put(out, static_cast<std::uint32_t>(tensors.size()));
  for (std::size_t t = 0; t < tensors.size(); ++t) {
    put(out, static_cast<std::uint16_t>(names[t].size()));
    out.write(names[t].data(), static_cast<std::streamsize>(names[t].size()));
    put(out, kDtypeF32);
    put(out, static_cast<std::uint8_t>(tensors[t]->rank()));
    for (std::size_t d : tensors[t]->shape()) put(out, static_cast<std::uint32_t>(d));
    out.write(reinterpret_cast<const char*>(tensors[t]->data()),
              static_cast<std::streamsize>(tensors[t]->size() * sizeof(float)));
  }
  const std::string meta = metadata.dump();
  put(out, static_cast<std::uint32_t>(meta.size()));
  out.write(meta.data(), static_cast<std::streamsize>(meta.size()));
  if (!out) throw IoError("short write to checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  using binary::get;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  auto fail = [&path](const std::string& why) -> void {
    throw CorruptCheckpoint(why + " in " + path.string());
  };

  char magic[4];
  if (!binary::get_bytes(in, magic, 4) || std::string_view(magic, 4) != std::string_view(kMagic, 4))
    fail("bad magic");
  std::uint16_t version = 0;
  if (!get(in, version) || version != kCheckpointVersion) fail("unsupported version");
  std::uint32_t count = 0;
  if (!get(in, count) || count > 1024) fail("bad tensor count");

  struct Record {
    std::string name;
    std::vector<std::size_t> shape;
    std::vector<float> values;
  };
  std::vector<Record> records(count);
  for (auto& rec : records) {
    std::uint16_t name_len = 0;
    if (!get(in, name_len)) fail("truncated record");
    rec.name.resize(name_len);
    if (!binary::get_bytes(in, rec.name.data(), name_len)) fail("truncated name");
    std::uint8_t dtype = 0, rank = 0;
    if (!get(in, dtype) || dtype != kDtypeF32) fail("unsupported dtype");
    if (!get(in, rank) || rank == 0 || rank > 8) fail("bad rank");
    rec.shape.resize(rank);
    for (auto& d : rec.shape) {
      std::uint32_t dim = 0;
      if (!get(in, dim) || dim == 0) fail("bad dimension");
      d = dim;
    }
    const std::size_t n = BasicTensor<float>::element_count(rec.shape);
    if (n > (std::size_t{1} << 28)) fail("tensor too large");
    rec.values.resize(n);
    if (!binary::get_bytes(in, reinterpret_cast<char*>(rec.values.data()), n * sizeof(float)))
      fail("truncated payload");
  }
  std::uint32_t meta_len = 0;
  if (!get(in, meta_len)) fail("missing metadata");
  std::string meta(meta_len, '\0');
  if (!binary::get_bytes(in, meta.data(), meta_len)) fail("truncated metadata");
  if (in.peek() != std::char_traits<char>::eof()) fail("trailing bytes");

  Checkpoint ck;
  try {
    ck.metadata = nlohmann::json::parse(meta);
    ck.params = ModelParams<float>::zeros(architecture_from_json(ck.metadata.at("architecture")));
  } catch (const nlohmann::json::exception& e) {
    fail(std::string("bad metadata: ") + e.what());
  } catch (const ShapeMismatch& e) {
    fail(std::string("bad architecture: ") + e.what());
  }
  const auto names = ModelParams<float>::tensor_names(ck.params.arch);
  auto tensors = ck.params.tensors();
  if (records.size() != tensors.size()) fail("tensor count does not match architecture");
  for (std::size_t t = 0; t < tensors.size(); ++t) {
    if (records[t].name != names[t]) fail("unexpected tensor " + records[t].name);
    if (records[t].shape != tensors[t]->shape()) fail("shape mismatch for " + names[t]);
    std::copy(records[t].values.begin(), records[t].values.end(), tensors[t]->data());
  }
  return ck;
}

}  // namespace lung
