#include <cmath>
#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "lane/mesh.hpp"

namespace lane {

namespace {

// First integer of an `f` entry like "3", "3/1", "3//2", "3/1/2".
int parse_face_index(const std::string& tok, int line_no) {
  const size_t slash = tok.find('/');
  const std::string head = slash == std::string::npos ? tok : tok.substr(0, slash);
  int value = 0;
  const auto res = std::from_chars(head.data(), head.data() + head.size(), value);
  if (res.ec != std::errc() || res.ptr != head.data() + head.size()) {
    throw MeshError("obj line " + std::to_string(line_no) + ": bad face index '" + tok + "'");
  }
  return value;
}

}  // namespace

Mesh parse_obj(const std::string& text) {
  Mesh mesh;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag.empty() || tag[0] == '#') continue;

    if (tag == "v") {
      Vec3 v;
      if (!(ls >> v.x >> v.y >> v.z)) {
        throw MeshError("obj line " + std::to_string(line_no) + ": malformed vertex record");
      }
      if (!std::isfinite(v.x) || !std::isfinite(v.y) || !std::isfinite(v.z)) {
        throw MeshError("obj line " + std::to_string(line_no) + ": non-finite coordinate");
      }
      mesh.vertices.push_back(v);
    } else if (tag == "f") {
      std::vector<int> idx;
      std::string tok;
      while (ls >> tok) {
        int v = parse_face_index(tok, line_no);
        if (v < 1 || v > static_cast<int>(mesh.vertices.size())) {
          throw MeshError("obj line " + std::to_string(line_no) + ": index out of range");
        }
        idx.push_back(v - 1);
      }
      if (idx.size() < 3) {
        throw MeshError("obj line " + std::to_string(line_no) + ": face needs >= 3 vertices");
      }
      // Fan triangulation for quads and larger polygons.
      for (size_t k = 1; k + 1 < idx.size(); ++k) {
        mesh.faces.push_back({idx[0], idx[k], idx[k + 1]});
      }
    }
    // vn/vt/usemtl/o/g/s/... ignored.
  }
  if (mesh.vertices.empty()) throw MeshError("obj: no vertex records");
  mesh.validate();
  return mesh;
}

Mesh load_obj(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw MeshError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_obj(buf.str());
}

void save_obj(const Mesh& mesh, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw MeshError("cannot write '" + path + "'");
  f.precision(9);
  for (const Vec3& v : mesh.vertices) {
    f << "v " << v.x << ' ' << v.y << ' ' << v.z << '\n';
  }
  for (const Face& face : mesh.faces) {
    f << "f " << face[0] + 1 << ' ' << face[1] + 1 << ' ' << face[2] + 1 << '\n';
  }
  if (!f) throw MeshError("write failed for '" + path + "'");
}

}  // namespace lane
