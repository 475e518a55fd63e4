#include <fstream>
#include <set>

#include "json.hpp"
#include "rrn/data.hpp"

namespace rrn::data {

using nlohmann::json;

std::string_view to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "train";
}

Split parse_split(std::string_view s) {
  if (s == "train") return Split::train;
  if (s == "val") return Split::val;
  if (s == "test") return Split::test;
  throw FormatError("unknown split '" + std::string(s) + "'");
}

std::vector<const ManifestEntry*> Manifest::split(Split s) const {
  std::vector<const ManifestEntry*> out;
  for (const auto& e : entries) {
    if (e.split == s) out.push_back(&e);
  }
  return out;
}

void save_manifest(const Manifest& m, const std::filesystem::path& dir) {
  json entries = json::array();
  for (const auto& e : m.entries) {
    entries.push_back({{"id", e.id},
                       {"image_path", e.image_path},
                       {"mask_path", e.mask_path},
                       {"split", std::string(to_string(e.split))}});
  }
  const json doc = {{"version", m.version}, {"generator_seed", m.generator_seed}, {"entries", entries}};
  std::ofstream out(dir / kManifestName, std::ios::trunc);
  if (!out) throw FormatError("cannot write manifest in " + dir.string());
  out << doc.dump(2) << '\n';
}

Manifest load_manifest(const std::filesystem::path& dir) {
  const auto path = dir / kManifestName;
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  Manifest m;
  m.root = dir;
  try {
    const json doc = json::parse(in);
    m.version = doc.at("version").get<int>();
    if (m.version != 1) throw FormatError("unsupported manifest version " + std::to_string(m.version));
    m.generator_seed = doc.at("generator_seed").get<std::uint64_t>();
    std::set<std::string> ids;
    for (const auto& je : doc.at("entries")) {
      ManifestEntry e;
      e.id = je.at("id").get<std::string>();
      e.image_path = je.at("image_path").get<std::string>();
      e.mask_path = je.at("mask_path").get<std::string>();
      e.split = parse_split(je.at("split").get<std::string>());
      if (!ids.insert(e.id).second) throw FormatError("duplicate manifest id '" + e.id + "'");
      for (const auto* p : {&e.image_path, &e.mask_path}) {
        if (!std::filesystem::exists(dir / *p)) {
          throw FormatError("manifest entry '" + e.id + "' references missing file " + (dir / *p).string());
        }
      }
      m.entries.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return m;
}

Sample load_sample(const Manifest& m, const ManifestEntry& e) {
  Sample s;
  s.id = e.id;
  s.image = load_ppm(m.root / e.image_path);
  const GrayMap g = load_pgm(m.root / e.mask_path);
  // Masks are stored as 0/255.
  s.gt = BinaryMap(g.height, g.width);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g.data[i] != 0.0 && g.data[i] != 1.0) {
      throw FormatError((m.root / e.mask_path).string() + ": mask is not binary (0/255)");
    }
    s.gt.data[i] = static_cast<std::uint8_t>(g.data[i]);
  }
  if (s.image.shape().h != s.gt.height || s.image.shape().w != s.gt.width) {
    throw FormatError("sample '" + e.id + "': image " + s.image.shape().str() + " vs mask " + s.gt.dims_str());
  }
  return s;
}

std::vector<Sample> load_split(const Manifest& m, Split split) {
  std::vector<Sample> out;
  for (const ManifestEntry* e : m.split(split)) out.push_back(load_sample(m, *e));
  return out;
}

}  // namespace rrn::data
