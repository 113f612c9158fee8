#include "proprio/telemetry.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string_view>

namespace proprio {

namespace {

constexpr std::string_view kHeaderTag = "#HEADER";
constexpr std::string_view kSampleTag = "#SAMPLE";

constexpr double kMassSumTolerance = 1e-9;
constexpr double kRotationTolerance = 1e-6;

std::string where(std::size_t record) { return " at record " + std::to_string(record); }

/// Whitespace tokenizer over one line with typed reads and line-aware errors.
class Tokens {
 public:
  Tokens(std::string_view line, std::size_t line_no) : line_no_(line_no) {
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
      std::size_t start = i;
      while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
      if (i > start) tokens_.push_back(line.substr(start, i - start));
    }
  }

  bool empty() const { return tokens_.empty(); }
  std::string_view tag() const { return tokens_.front(); }

  double number() {
    std::string_view tok = next();
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) {
      fail("malformed number '" + std::string(tok) + "'");
    }
    if (!std::isfinite(value)) fail("non-finite value");
    return value;
  }

  std::size_t count() {
    double v = number();
    if (v < 0.0 || v != std::floor(v)) fail("expected a non-negative integer");
    return static_cast<std::size_t>(v);
  }

  bool flag() {
    double v = number();
    if (v != 0.0 && v != 1.0) fail("expected 0 or 1");
    return v == 1.0;
  }

  Vec3 vec3() {
    Vec3 v;
    v.x() = number();
    v.y() = number();
    v.z() = number();
    return v;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw ValidationError("malformed record on line " + std::to_string(line_no_) + ": " + what);
  }

 private:
  std::string_view next() {
    if (pos_ >= tokens_.size()) fail("record truncated after " + std::to_string(pos_) + " fields");
    return tokens_[pos_++];
  }

  std::vector<std::string_view> tokens_;
  std::size_t pos_ = 1;  // skip tag
  std::size_t line_no_;
};

StreamHeader parse_header(Tokens& tok) {
  StreamHeader h;
  h.robot_mass = tok.number();
  h.gravity = tok.vec3();
  h.joint_count = tok.count();
  h.segment_count = tok.count();
  h.sample_rate_hz = tok.number();
  return h;
}

ProprioSample parse_sample(Tokens& tok, const StreamHeader& h) {
  ProprioSample s;
  s.t = tok.number();
  s.joint_torque.resize(h.joint_count);
  for (auto& v : s.joint_torque) v = tok.number();
  s.joint_velocity.resize(h.joint_count);
  for (auto& v : s.joint_velocity) v = tok.number();
  for (auto& c : s.contact) c = tok.flag();
  for (auto& p : s.foot_pos_base) p = tok.vec3();
  for (auto& p : s.foot_pos_des_base) p = tok.vec3();
  for (auto& v : s.foot_vel_base) v = tok.vec3();
  for (auto& v : s.foot_vel_des_base) v = tok.vec3();
  s.base_pose.rotation.w() = tok.number();
  s.base_pose.rotation.x() = tok.number();
  s.base_pose.rotation.y() = tok.number();
  s.base_pose.rotation.z() = tok.number();
  s.base_pose.translation = tok.vec3();
  s.segment_accel.resize(h.segment_count);
  for (auto& a : s.segment_accel) a = tok.vec3();
  s.segment_mass.resize(h.segment_count);
  for (auto& m : s.segment_mass) m = tok.number();
  s.com_world = tok.vec3();
  if (tok.flag()) {
    PerFoot<Vec3> world;
    for (auto& p : world) p = tok.vec3();
    s.foot_pos_world = world;
  }
  // Anything left on the line is a forward-compatible extension; ignore it.
  return s;
}

void put(std::ostream& out, double v) { out << ' ' << format_number(v); }

void put(std::ostream& out, const Vec3& v) {
  put(out, v.x());
  put(out, v.y());
  put(out, v.z());
}

bool finite(const Vec3& v) { return v.allFinite(); }

}  // namespace

std::string format_number(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 17);
  if (ec != std::errc()) throw std::logic_error("number formatting failed");
  return std::string(buf, ptr);
}

void validate_header(const StreamHeader& h) {
  if (!(h.robot_mass > 0.0) || !std::isfinite(h.robot_mass)) {
    throw ValidationError("header: robot_mass must be > 0");
  }
  if (!h.gravity.allFinite() || !(h.gravity.norm() > 0.0)) {
    throw ValidationError("header: gravity must be finite with |g| > 0");
  }
  if (h.joint_count < 1) throw ValidationError("header: joint_count must be >= 1");
  if (h.segment_count < 1) throw ValidationError("header: segment_count must be >= 1");
  if (!(h.sample_rate_hz > 0.0)) throw ValidationError("header: sample_rate_hz must be > 0");
}

StreamValidator::StreamValidator(const StreamHeader& header) : header_(header) {
  validate_header(header_);
}

void StreamValidator::check(const ProprioSample& s) {
  ++record_;
  const std::string at = where(record_);

  if (!std::isfinite(s.t)) throw ValidationError("non-finite time" + at);
  if (last_t_ && !(s.t > *last_t_)) throw ValidationError("non-monotonic time" + at);

  if (s.joint_torque.size() != header_.joint_count ||
      s.joint_velocity.size() != header_.joint_count) {
    throw ValidationError("joint array length differs from header" + at);
  }
  if (s.segment_accel.size() != header_.segment_count ||
      s.segment_mass.size() != header_.segment_count) {
    throw ValidationError("segment array length differs from header" + at);
  }

  for (std::size_t i = 0; i < header_.joint_count; ++i) {
    if (!std::isfinite(s.joint_torque[i]) || !std::isfinite(s.joint_velocity[i])) {
      throw ValidationError("non-finite joint signal" + at);
    }
  }
  for (std::size_t f = 0; f < kFeet; ++f) {
    if (!finite(s.foot_pos_base[f]) || !finite(s.foot_pos_des_base[f]) ||
        !finite(s.foot_vel_base[f]) || !finite(s.foot_vel_des_base[f])) {
      throw ValidationError("non-finite foot kinematics" + at);
    }
    if (s.foot_pos_world && !finite((*s.foot_pos_world)[f])) {
      throw ValidationError("non-finite world foot position" + at);
    }
  }
  if (!finite(s.com_world) || !finite(s.base_pose.translation)) {
    throw ValidationError("non-finite pose or CoM" + at);
  }

  // A unit quaternion maps to an orthonormal matrix with determinant +1.
  const double qn2 = s.base_pose.rotation.squaredNorm();
  if (!std::isfinite(qn2) || std::abs(qn2 - 1.0) > kRotationTolerance) {
    throw ValidationError("base rotation is not orthonormal" + at);
  }

  double mass_sum = 0.0;
  for (std::size_t i = 0; i < header_.segment_count; ++i) {
    if (!(s.segment_mass[i] > 0.0)) throw ValidationError("segment mass must be > 0" + at);
    if (!finite(s.segment_accel[i])) throw ValidationError("non-finite segment acceleration" + at);
    mass_sum += s.segment_mass[i];
  }
  if (std::abs(mass_sum - header_.robot_mass) > kMassSumTolerance * header_.robot_mass) {
    throw ValidationError("segment masses do not sum to robot_mass" + at);
  }
  if (first_masses_.empty()) {
    first_masses_ = s.segment_mass;
  } else if (first_masses_ != s.segment_mass) {
    throw ValidationError("segment masses changed within the stream" + at);
  }

  last_t_ = s.t;
}

Stream parse_stream(std::istream& in) {
  Stream stream;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  std::optional<StreamValidator> validator;

  while (std::getline(in, line)) {
    ++line_no;
    Tokens tok(line, line_no);
    if (tok.empty()) continue;
    if (!have_header) {
      if (tok.tag() != kHeaderTag) tok.fail("expected #HEADER as the first record");
      stream.header = parse_header(tok);
      validator.emplace(stream.header);
      have_header = true;
      continue;
    }
    if (tok.tag() != kSampleTag) tok.fail("unknown record tag '" + std::string(tok.tag()) + "'");
    ProprioSample s = parse_sample(tok, stream.header);
    validator->check(s);
    stream.samples.push_back(std::move(s));
  }
  if (!have_header) throw ValidationError("telemetry stream has no #HEADER record");
  return stream;
}

Stream read_stream(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open telemetry file " + path.string());
  return parse_stream(in);
}

void serialize_stream(const StreamHeader& h, std::span<const ProprioSample> samples,
                      std::ostream& out) {
  StreamValidator validator(h);
  for (const auto& s : samples) validator.check(s);

  out << kHeaderTag;
  put(out, h.robot_mass);
  put(out, h.gravity);
  out << ' ' << h.joint_count << ' ' << h.segment_count;
  put(out, h.sample_rate_hz);
  out << '\n';

  for (const auto& s : samples) {
    out << kSampleTag;
    put(out, s.t);
    for (double v : s.joint_torque) put(out, v);
    for (double v : s.joint_velocity) put(out, v);
    for (bool c : s.contact) out << ' ' << (c ? 1 : 0);
    for (const auto& p : s.foot_pos_base) put(out, p);
    for (const auto& p : s.foot_pos_des_base) put(out, p);
    for (const auto& v : s.foot_vel_base) put(out, v);
    for (const auto& v : s.foot_vel_des_base) put(out, v);
    const auto& q = s.base_pose.rotation;
    put(out, q.w());
    put(out, q.x());
    put(out, q.y());
    put(out, q.z());
    put(out, s.base_pose.translation);
    for (const auto& a : s.segment_accel) put(out, a);
    for (double m : s.segment_mass) put(out, m);
    put(out, s.com_world);
    if (s.foot_pos_world) {
      out << " 1";
      for (const auto& p : *s.foot_pos_world) put(out, p);
    } else {
      out << " 0";
    }
    out << '\n';
  }
}

void write_stream(const StreamHeader& h, std::span<const ProprioSample> samples,
                  const std::filesystem::path& path) {
  std::ostringstream buffer;
  serialize_stream(h, samples, buffer);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << buffer.str();
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace proprio
