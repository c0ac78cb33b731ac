#include "pcdn/manifest.hpp"

#include <fstream>
#include <sstream>

#include "pcdn/error.hpp"
#include "pcdn/text.hpp"

namespace pcdn {
namespace {

std::map<std::string, std::string> with_prefix(const std::map<std::string, std::string>& kv,
                                               const std::string& prefix) {
  std::map<std::string, std::string> out;
  for (const auto& [k, v] : kv)
    if (k.rfind(prefix, 0) == 0) out.emplace(k, v);
  return out;
}

std::map<std::string, std::string> strip_prefix(const std::map<std::string, std::string>& kv,
                                                const std::string& prefix) {
  std::map<std::string, std::string> out;
  for (const auto& [k, v] : kv)
    if (k.rfind(prefix, 0) == 0) out.emplace(k.substr(prefix.size()), v);
  return out;
}

}  // namespace

void KeyValueDocument::merge(const std::map<std::string, std::string>& kv) {
  for (const auto& [k, v] : kv) entries[k] = v;
}

const std::string& KeyValueDocument::at(const std::string& key) const {
  auto it = entries.find(key);
  if (it == entries.end()) throw ParseError("missing key '" + key + "' in " + kind + " file");
  return it->second;
}

std::optional<std::string> KeyValueDocument::get(const std::string& key) const {
  auto it = entries.find(key);
  if (it == entries.end()) return std::nullopt;
  return it->second;
}

void KeyValueDocument::write(std::ostream& out) const {
  out << "# pcdn " << kind << " v" << version << '\n';
  for (const auto& [k, v] : entries) {
    if (k.find('=') != std::string::npos || k.find('\n') != std::string::npos ||
        v.find('\n') != std::string::npos)
      throw InvalidInput("key/value '" + k + "' cannot be stored in a flat key=value file");
    out << k << '=' << v << '\n';
  }
}

void KeyValueDocument::write(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  write(out);
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

KeyValueDocument KeyValueDocument::read(std::istream& in) {
  KeyValueDocument doc;
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty key=value file", 1);
  const auto head = split_whitespace(trim(line));
  if (head.size() != 4 || head[0] != "#" || head[1] != "pcdn" || head[3].size() < 2 ||
      head[3][0] != 'v')
    throw ParseError("missing '# pcdn <kind> v<n>' header", 1);
  doc.kind = std::string(head[2]);
  doc.version = static_cast<int>(parse_u64(head[3].substr(1)));
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected key=value", line_no);
    doc.entries[std::string(trim(std::string_view(line).substr(0, eq)))] = line.substr(eq + 1);
  }
  return doc;
}

KeyValueDocument KeyValueDocument::read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return read(in);
}

KeyValueDocument RunManifest::to_document() const {
  KeyValueDocument doc{"manifest", 1, {}};
  doc.entries["command"] = command;
  doc.entries["tool_version"] = tool_version;
  for (const auto& [k, v] : inputs) doc.entries["input." + k] = v;
  for (const auto& [k, v] : outputs) doc.entries["output." + k] = v;
  for (const auto& [k, v] : extra) doc.entries["param." + k] = v;
  if (noise) doc.merge(noise->to_key_values());
  if (train) doc.merge(train->to_key_values());
  if (tvpc) doc.merge(tvpc->to_key_values());
  if (weights_path) doc.entries["weights"] = *weights_path;
  if (sigma_abs) doc.entries["sigma_abs"] = format_double(*sigma_abs);
  if (kernel_variance) doc.entries["kernel_variance"] = format_double(*kernel_variance);
  if (kde_bandwidth) doc.entries["kde_bandwidth"] = format_double(*kde_bandwidth);
  return doc;
}

RunManifest RunManifest::from_document(const KeyValueDocument& doc) {
  if (doc.kind != "manifest") throw ParseError("not a manifest file (kind '" + doc.kind + "')");
  RunManifest m;
  m.command = doc.at("command");
  m.tool_version = doc.at("tool_version");
  m.inputs = strip_prefix(doc.entries, "input.");
  m.outputs = strip_prefix(doc.entries, "output.");
  m.extra = strip_prefix(doc.entries, "param.");
  if (const auto kv = with_prefix(doc.entries, "noise."); !kv.empty())
    m.noise = NoiseSpec::from_key_values(kv);
  if (const auto kv = with_prefix(doc.entries, "train."); !kv.empty())
    m.train = TrainConfig::from_key_values(kv);
  if (const auto kv = with_prefix(doc.entries, "tvpc."); !kv.empty())
    m.tvpc = TvpcConfig::from_key_values(kv);
  if (auto v = doc.get("weights")) m.weights_path = *v;
  if (auto v = doc.get("sigma_abs")) m.sigma_abs = parse_double(*v);
  if (auto v = doc.get("kernel_variance")) m.kernel_variance = parse_double(*v);
  if (auto v = doc.get("kde_bandwidth")) m.kde_bandwidth = parse_double(*v);
  return m;
}

KeyValueDocument WeightsHeader::to_document() const {
  KeyValueDocument doc{"weights", 1, {}};
  doc.merge(config.to_key_values());
  doc.entries["network.feature_scale"] = format_double(feature_scale);
  doc.entries["network.architecture"] = "encoder(3-H-H) maxpool head(H-H-3) relu";
  doc.entries["tool_version"] = kToolVersion;
  return doc;
}

WeightsHeader WeightsHeader::from_document(const KeyValueDocument& doc) {
  if (doc.kind != "weights") throw ParseError("not a weights header (kind '" + doc.kind + "')");
  WeightsHeader h;
  h.config = TrainConfig::from_key_values(with_prefix(doc.entries, "train."));
  h.feature_scale = parse_double(doc.at("network.feature_scale"));
  return h;
}

std::filesystem::path weights_header_path(const std::filesystem::path& weights) {
  return std::filesystem::path(weights.string() + ".cfg");
}

}  // namespace pcdn
