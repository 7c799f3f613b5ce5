#include "hoil/dataset_io.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

namespace hoil {

static_assert(std::endian::native == std::endian::little, "container format assumes a little-endian host");

ParseError::ParseError(const std::string& what, long line, long offset)
    : std::runtime_error([&] {
        std::ostringstream msg;
        msg << what;
        if (line >= 0) msg << " (line " << line << ")";
        if (offset >= 0) msg << " (offset " << offset << ")";
        return msg.str();
      }()),
      line_(line),
      offset_(offset) {}

namespace {

constexpr const char* kMagic = "HOILDATA v1";

struct Container {
  std::vector<std::pair<std::string, std::string>> fields;
  std::vector<std::string> records;
};

template <typename T>
void put(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

void put_vector(std::string& out, const std::vector<double>& v) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(v.size()));
  for (double x : v) put<double>(out, x);
}

class Reader {
 public:
  Reader(const std::string& bytes, std::size_t file_offset) : bytes_(bytes), base_(file_offset), end_(bytes.size()) {}

  template <typename T>
  T get(const char* what) {
    if (end_ - pos_ < sizeof(T)) throw ParseError(std::string("truncated record while reading ") + what, -1, long(base_ + pos_));
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  std::vector<double> get_vector(const char* what) {
    const auto n = get<std::uint32_t>(what);
    if ((end_ - pos_) / sizeof(double) < n) {
      throw ParseError(std::string("truncated record while reading ") + what, -1, long(base_ + pos_));
    }
    std::vector<double> v(n);
    std::memcpy(v.data(), bytes_.data() + pos_, n * sizeof(double));
    pos_ += n * sizeof(double);
    return v;
  }

  long file_offset() const { return long(base_ + pos_); }
  bool done() const { return pos_ == end_; }

 private:
  const std::string& bytes_;
  std::size_t base_;
  std::size_t pos_ = 0;
  std::size_t end_;
};

bool is_token(const std::string& s) {
  return !s.empty() && s.find_first_of(" \t\r\n") == std::string::npos;
}

std::string hex_double(double x) {
  std::ostringstream out;
  out << std::hexfloat << x;
  return out.str();
}

std::string write_container(const Container& c) {
  std::string out = kMagic;
  out += '\n';
  for (const auto& [key, value] : c.fields) {
    if (!is_token(key) || value.find('\n') != std::string::npos) {
      throw std::invalid_argument("header field '" + key + "' cannot be encoded");
    }
    out += key + ' ' + value + '\n';
  }
  out += "records " + std::to_string(c.records.size()) + "\nend_header\n";
  for (const auto& rec : c.records) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(rec.size()));
    out += rec;
  }
  return out;
}

Container read_container(const std::string& bytes) {
  Container c;
  std::size_t pos = 0;
  long line_no = 0;
  const auto next_line = [&]() -> std::string {
    ++line_no;
    const auto nl = bytes.find('\n', pos);
    if (nl == std::string::npos) throw ParseError("unterminated header", line_no, -1);
    std::string line = bytes.substr(pos, nl - pos);
    pos = nl + 1;
    return line;
  };
  if (next_line() != kMagic) throw ParseError("bad magic, expected '" + std::string(kMagic) + "'", 1, -1);
  long declared = -1;
  for (;;) {
    const std::string line = next_line();
    if (line == "end_header") break;
    const auto space = line.find(' ');
    if (space == std::string::npos || space == 0) throw ParseError("malformed header line '" + line + "'", line_no, -1);
    std::string key = line.substr(0, space);
    std::string value = line.substr(space + 1);
    if (key == "records") {
      long n = -1;
      const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), n);
      if (ec != std::errc{} || ptr != value.data() + value.size() || n < 0) {
        throw ParseError("bad record count '" + value + "'", line_no, -1);
      }
      declared = n;
    } else {
      c.fields.emplace_back(std::move(key), std::move(value));
    }
  }
  if (declared < 0) throw ParseError("header lacks a record count", line_no, -1);
  for (long i = 0; i < declared; ++i) {
    if (bytes.size() - pos < sizeof(std::uint32_t)) {
      throw ParseError("truncated record length (record " + std::to_string(i) + ")", -1, long(pos));
    }
    std::uint32_t len = 0;
    std::memcpy(&len, bytes.data() + pos, sizeof len);
    pos += sizeof len;
    if (bytes.size() - pos < len) {
      throw ParseError("truncated record body (record " + std::to_string(i) + ")", -1, long(pos));
    }
    c.records.push_back(bytes.substr(pos, len));
    pos += len;
  }
  if (pos != bytes.size()) throw ParseError("trailing bytes after last record", -1, long(pos));
  return c;
}

const std::string& field(const Container& c, const std::string& key) {
  for (const auto& [k, v] : c.fields) {
    if (k == key) return v;
  }
  throw ParseError("header lacks field '" + key + "'", -1, -1);
}

template <typename T>
T parse_integer(const std::string& text, const std::string& key) {
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ParseError("field '" + key + "' is not an integer: '" + text + "'", -1, -1);
  }
  return value;
}

double parse_real(const std::string& text, const std::string& key) {
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (end != text.c_str() + text.size() || text.empty()) {
    throw ParseError("field '" + key + "' is not a real: '" + text + "'", -1, -1);
  }
  return v;
}

std::string encode_trajectory(const Trajectory& traj) {
  std::string rec;
  put<std::uint32_t>(rec, static_cast<std::uint32_t>(traj.steps.size()));
  put<double>(rec, traj.episode_return);
  put<std::uint8_t>(rec, traj.terminated ? 1 : 0);
  for (const auto& s : traj.steps) {
    put<std::int32_t>(rec, s.t);
    put<std::int32_t>(rec, s.latent_state);
    put<std::int32_t>(rec, s.action);
    put<double>(rec, s.reward);
    put_vector(rec, s.obs_e);
    put_vector(rec, s.obs_l);
  }
  return rec;
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

std::string serialize_dataset(const Dataset& d) {
  if (!is_token(d.header.env_id) || !is_token(d.header.kind)) {
    throw std::invalid_argument("env id and kind must be non-empty and whitespace-free");
  }
  Container c;
  c.fields = {{"env_id", d.header.env_id},
              {"obs_dim_e", std::to_string(d.header.obs_dim_e)},
              {"obs_dim_l", std::to_string(d.header.obs_dim_l)},
              {"gamma", hex_double(d.header.gamma)},
              {"seed", std::to_string(d.header.seed)},
              {"kind", d.header.kind}};
  for (const auto& traj : d.trajectories) c.records.push_back(encode_trajectory(traj));
  return write_container(c);
}

Dataset parse_dataset(const std::string& bytes) {
  const Container c = read_container(bytes);
  Dataset d;
  d.header.env_id = field(c, "env_id");
  d.header.obs_dim_e = parse_integer<int>(field(c, "obs_dim_e"), "obs_dim_e");
  d.header.obs_dim_l = parse_integer<int>(field(c, "obs_dim_l"), "obs_dim_l");
  d.header.gamma = parse_real(field(c, "gamma"), "gamma");
  d.header.seed = parse_integer<std::uint64_t>(field(c, "seed"), "seed");
  d.header.kind = field(c, "kind");
  if (d.header.kind.starts_with("model:")) throw ParseError("file holds a model checkpoint, not a dataset", -1, -1);

  std::size_t offset = bytes.find("end_header\n") + std::strlen("end_header\n");
  for (const auto& rec : c.records) {
    offset += sizeof(std::uint32_t);
    Reader r(rec, offset);
    Trajectory traj;
    const auto n = r.get<std::uint32_t>("step count");
    traj.episode_return = r.get<double>("episode return");
    const auto term = r.get<std::uint8_t>("terminated flag");
    if (term > 1) throw ParseError("terminated flag must be 0 or 1", -1, r.file_offset() - 1);
    traj.terminated = term == 1;
    for (std::uint32_t i = 0; i < n; ++i) {
      DualInstance s;
      s.t = r.get<std::int32_t>("time index");
      s.latent_state = r.get<std::int32_t>("latent state");
      s.action = r.get<std::int32_t>("action");
      s.reward = r.get<double>("reward");
      s.obs_e = r.get_vector("O_E observation");
      s.obs_l = r.get_vector("O_L observation");
      if ((!s.obs_e.empty() && static_cast<int>(s.obs_e.size()) != d.header.obs_dim_e) ||
          (!s.obs_l.empty() && static_cast<int>(s.obs_l.size()) != d.header.obs_dim_l)) {
        throw ParseError("observation dimension disagrees with the header", -1, r.file_offset());
      }
      traj.steps.push_back(std::move(s));
    }
    if (!r.done()) throw ParseError("record has trailing bytes", -1, r.file_offset());
    d.trajectories.push_back(std::move(traj));
    offset += rec.size();
  }
  return d;
}

void save_dataset(const std::filesystem::path& path, const Dataset& dataset) {
  write_file(path, serialize_dataset(dataset));
}

Dataset load_dataset(const std::filesystem::path& path) { return parse_dataset(read_file(path)); }

void save_model(const std::filesystem::path& path, const Approximator& f, const std::string& tag) {
  if (!is_token(tag)) throw std::invalid_argument("model tag must be non-empty and whitespace-free");
  Container c;
  std::string layers;
  for (int n : f.layer_sizes()) layers += (layers.empty() ? "" : ",") + std::to_string(n);
  c.fields = {{"kind", "model:" + tag}, {"layers", layers}, {"head", head_name(f.head())}};
  std::string rec;
  put_vector(rec, std::vector<double>(f.params().data(), f.params().data() + f.params().size()));
  c.records.push_back(std::move(rec));
  write_file(path, write_container(c));
}

Approximator load_model(const std::filesystem::path& path, std::string* tag) {
  const std::string bytes = read_file(path);
  const Container c = read_container(bytes);
  const std::string& kind = field(c, "kind");
  if (!kind.starts_with("model:")) throw ParseError("file holds '" + kind + "', not a model checkpoint", -1, -1);
  std::vector<int> sizes;
  std::stringstream ss(field(c, "layers"));
  for (std::string part; std::getline(ss, part, ',');) sizes.push_back(parse_integer<int>(part, "layers"));
  Approximator f(sizes, parse_head(field(c, "head")));
  if (c.records.size() != 1) throw ParseError("model checkpoint must hold exactly one record", -1, -1);
  Reader r(c.records.front(), 0);
  const auto params = r.get_vector("parameters");
  if (static_cast<Eigen::Index>(params.size()) != f.parameter_count()) {
    throw ParseError("parameter count disagrees with the layer sizes", -1, -1);
  }
  f.params() = Eigen::Map<const Eigen::VectorXd>(params.data(), f.parameter_count());
  if (tag) *tag = kind.substr(6);
  return f;
}

}  // namespace hoil
