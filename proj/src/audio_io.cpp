#include "lung/audio_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <optional>
#include <string>

#include "lung/errors.hpp"

namespace lung {
namespace {

constexpr std::uint16_t kFormatPcm = 0x0001;
constexpr std::uint16_t kFormatFloat = 0x0003;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

static_assert(std::endian::native == std::endian::little,
              "WAV decoding assumes a little-endian host");

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t remaining() const { return bytes_.size() - pos_; }
  std::size_t position() const { return pos_; }

  void skip(std::size_t n) {
    if (n > remaining()) throw MalformedHeader("chunk extends past end of file");
    pos_ += n;
  }

  template <typename T>
  T read() {
    if (sizeof(T) > remaining()) throw MalformedHeader("unexpected end of file");
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  std::string read_tag() {
    if (remaining() < 4) throw MalformedHeader("unexpected end of file");
    std::string tag(reinterpret_cast<const char*>(bytes_.data() + pos_), 4);
    pos_ += 4;
    return tag;
  }

  std::span<const std::uint8_t> take(std::size_t n) {
    if (n > remaining()) throw MalformedHeader("chunk extends past end of file");
    auto out = bytes_.subspan(pos_, n);
    pos_ += n;
    return out;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

struct FormatChunk {
  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t block_align = 0;
  std::uint16_t bits_per_sample = 0;
};

FormatChunk parse_fmt(std::span<const std::uint8_t> body) {
  ByteReader r(body);
  if (body.size() < 16) throw MalformedHeader("fmt chunk shorter than 16 bytes");
  FormatChunk fmt;
  fmt.format = r.read<std::uint16_t>();
  fmt.channels = r.read<std::uint16_t>();
  fmt.sample_rate = r.read<std::uint32_t>();
  r.read<std::uint32_t>();  // byte rate
  fmt.block_align = r.read<std::uint16_t>();
  fmt.bits_per_sample = r.read<std::uint16_t>();

  if (fmt.format == kFormatExtensible) {
    if (body.size() < 40) throw MalformedHeader("short WAVE_FORMAT_EXTENSIBLE fmt chunk");
    r.read<std::uint16_t>();  // cbSize
    r.read<std::uint16_t>();  // valid bits
    r.read<std::uint32_t>();  // channel mask
    // The first two bytes of the sub-format GUID carry the actual format code.
    fmt.format = r.read<std::uint16_t>();
  }
  return fmt;
}

double decode_sample(const std::uint8_t* p, const FormatChunk& fmt) {
  if (fmt.format == kFormatFloat) {
    float v;
    std::memcpy(&v, p, sizeof(float));
    if (!std::isfinite(v)) return 0.0;
    return std::clamp(static_cast<double>(v), -1.0, 1.0);
  }
  switch (fmt.bits_per_sample) {
    case 8:
      return (static_cast<double>(p[0]) - 128.0) / 128.0;
    case 16: {
      std::int16_t v;
      std::memcpy(&v, p, 2);
      return v / 32768.0;
    }
    case 24: {
      std::int32_t v = static_cast<std::int32_t>(p[0]) |
                       (static_cast<std::int32_t>(p[1]) << 8) |
                       (static_cast<std::int32_t>(static_cast<std::int8_t>(p[2])) << 16);
      return v / 8388608.0;
    }
    case 32: {
      std::int32_t v;
      std::memcpy(&v, p, 4);
      return v / 2147483648.0;
    }
    default:
      throw UnsupportedEncoding("PCM bit depth " + std::to_string(fmt.bits_per_sample));
  }
}

}  // namespace

AudioClip decode_wav(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  if (bytes.size() < 12) throw MalformedHeader("file shorter than a RIFF header");
  if (r.read_tag() != "RIFF") throw MalformedHeader("missing RIFF magic");
  const auto riff_size = r.read<std::uint32_t>();
  if (riff_size < 4) throw MalformedHeader("RIFF size too small");
  if (r.read_tag() != "WAVE") throw MalformedHeader("missing WAVE magic");

  std::optional<FormatChunk> fmt;
  std::optional<std::span<const std::uint8_t>> data;
  while (r.remaining() >= 8 && !data) {
    const std::string tag = r.read_tag();
    const auto size = r.read<std::uint32_t>();
    if (tag == "fmt ") {
      fmt = parse_fmt(r.take(size));
    } else if (tag == "data") {
      data = r.take(size);
    } else {
      r.skip(size);
    }
    if ((size & 1U) != 0 && r.remaining() > 0) r.skip(1);  // word alignment pad
  }
  if (!fmt) throw MalformedHeader("no fmt chunk");
  if (!data) throw MalformedHeader("no data chunk");

  if (fmt->format != kFormatPcm && fmt->format != kFormatFloat)
    throw UnsupportedEncoding("format code " + std::to_string(fmt->format));
  if (fmt->format == kFormatFloat && fmt->bits_per_sample != 32)
    throw UnsupportedEncoding("float samples must be 32-bit");
  if (fmt->channels == 0) throw MalformedHeader("zero channels");
  if (fmt->sample_rate == 0) throw MalformedHeader("zero sample rate");
  const std::size_t bytes_per_sample = fmt->bits_per_sample / 8;
  if (bytes_per_sample == 0 || fmt->bits_per_sample % 8 != 0)
    throw UnsupportedEncoding("bit depth " + std::to_string(fmt->bits_per_sample));
  const std::size_t frame_bytes = bytes_per_sample * fmt->channels;
  if (fmt->block_align != 0 && fmt->block_align != frame_bytes)
    throw MalformedHeader("block align disagrees with channels x bit depth");

  const std::size_t n_frames = data->size() / frame_bytes;
  if (n_frames == 0) throw EmptyAudio("data chunk holds no complete frames");

  AudioClip clip;
  clip.sample_rate = static_cast<int>(fmt->sample_rate);
  clip.samples.resize(n_frames);
  const double inv_channels = 1.0 / fmt->channels;
  for (std::size_t f = 0; f < n_frames; ++f) {
    const std::uint8_t* frame = data->data() + f * frame_bytes;
    double acc = 0.0;
    for (std::size_t c = 0; c < fmt->channels; ++c)
      acc += decode_sample(frame + c * bytes_per_sample, *fmt);
    clip.samples[f] = fmt->channels == 1 ? acc : acc * inv_channels;
  }
  return clip;
}

AudioClip load_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_wav(bytes);
}

void write_wav(const std::filesystem::path& path, const AudioClip& clip, WavEncoding encoding) {
  if (clip.sample_rate <= 0) throw InvalidConfig("sample rate must be positive");
  const std::uint16_t bits = static_cast<std::uint16_t>(encoding);
  const std::uint16_t format = encoding == WavEncoding::Float32 ? kFormatFloat : kFormatPcm;
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(clip.samples.size() * (bits / 8));

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  auto put = [&out](auto value) { out.write(reinterpret_cast<const char*>(&value), sizeof(value)); };
  out.write("RIFF", 4);
  put(static_cast<std::uint32_t>(36 + data_bytes));
  out.write("WAVEfmt ", 8);
  put(std::uint32_t{16});
  put(format);
  put(std::uint16_t{1});
  put(static_cast<std::uint32_t>(clip.sample_rate));
  put(static_cast<std::uint32_t>(clip.sample_rate * (bits / 8)));
  put(static_cast<std::uint16_t>(bits / 8));
  put(bits);
  out.write("data", 4);
  put(data_bytes);
  for (double s : clip.samples) {
    const double v = std::clamp(s, -1.0, 1.0);
    if (encoding == WavEncoding::Float32) {
      put(static_cast<float>(v));
    } else {
      put(static_cast<std::int16_t>(std::clamp(std::lround(v * 32768.0), -32768L, 32767L)));
    }
  }
  if (!out) throw IoError("short write to " + path.string());
}

AudioClip resample(const AudioClip& clip, int target_rate) {
  if (target_rate <= 0) throw InvalidConfig("target sample rate must be positive");
  if (clip.sample_rate <= 0) throw InvalidConfig("clip sample rate must be positive");
  if (clip.sample_rate == target_rate || clip.samples.empty()) {
    AudioClip same = clip;
    same.sample_rate = target_rate;
    return same;
  }
  const std::size_t n_in = clip.samples.size();
  const double ratio = static_cast<double>(clip.sample_rate) / target_rate;
  const auto n_out = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(static_cast<double>(n_in) / ratio)));

  AudioClip out;
  out.sample_rate = target_rate;
  out.samples.resize(n_out);
  for (std::size_t j = 0; j < n_out; ++j) {
    // Integer arithmetic for the source position keeps exact hits exact.
    const std::uint64_t num = static_cast<std::uint64_t>(j) * clip.sample_rate;
    const std::size_t i0 = static_cast<std::size_t>(num / target_rate);
    const double frac = static_cast<double>(num % target_rate) / target_rate;
    if (i0 + 1 >= n_in) {
      out.samples[j] = clip.samples[n_in - 1];
    } else {
      const double a = clip.samples[i0];
      const double b = clip.samples[i0 + 1];
      out.samples[j] = frac == 0.0 ? a : a + frac * (b - a);
    }
  }
  return out;
}

}  // namespace lung
