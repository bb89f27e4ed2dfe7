#include "afpnkit/annotations.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace afpnkit {

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void spit(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

}  // namespace

int AnnotationSet::category_id(const std::string& name) const {
  const auto it = std::find(categories.begin(), categories.end(), name);
  return it == categories.end()
             ? -1
             : static_cast<int>(it - categories.begin());
}

const ImageInfo& AnnotationSet::image(int image_id) const {
  for (const auto& img : images) {
    if (img.image_id == image_id) return img;
  }
  throw std::runtime_error("unknown image_id " + std::to_string(image_id));
}

void AnnotationSet::validate() const {
  std::set<std::string> names;
  for (const auto& c : categories) {
    if (c.empty()) throw std::runtime_error("empty category name");
    if (!names.insert(c).second) {
      throw std::runtime_error("duplicate category \"" + c + "\"");
    }
  }
  std::set<int> ids;
  for (const auto& img : images) {
    if (!ids.insert(img.image_id).second) {
      throw std::runtime_error("duplicate image_id " +
                               std::to_string(img.image_id));
    }
    if (img.width < 1 || img.height < 1) {
      throw std::runtime_error("image " + std::to_string(img.image_id) +
                               " has non-positive size");
    }
  }
  for (std::size_t i = 0; i < ground_truths.size(); ++i) {
    const auto& g = ground_truths[i];
    const std::string where = "ground_truths[" + std::to_string(i) + "]";
    if (!ids.count(g.image_id)) {
      throw std::runtime_error(where + " references unknown image_id " +
                               std::to_string(g.image_id));
    }
    if (g.class_id < 0 ||
        g.class_id >= static_cast<int>(categories.size())) {
      throw std::runtime_error(where + " has an unknown class");
    }
    const auto& img = image(g.image_id);
    if (!(g.box.w > 0.0 && g.box.h > 0.0)) {
      throw std::runtime_error(where + " must satisfy x_min < x_max and " +
                               "y_min < y_max");
    }
    if (g.box.x_min() < 0.0 || g.box.y_min() < 0.0 ||
        g.box.x_max() > img.width || g.box.y_max() > img.height) {
      throw std::runtime_error(where + " falls outside its image bounds");
    }
  }
}

namespace {

BBox box_from_record(const nlohmann::json& r) {
  return BBox::from_corners(r.at("x_min").get<double>(),
                            r.at("y_min").get<double>(),
                            r.at("x_max").get<double>(),
                            r.at("y_max").get<double>());
}

void box_to_record(const BBox& b, nlohmann::json& r) {
  r["x_min"] = b.x_min();
  r["y_min"] = b.y_min();
  r["x_max"] = b.x_max();
  r["y_max"] = b.y_max();
}

}  // namespace

AnnotationSet annotations_from_json_text(const std::string& text) {
  const auto doc = nlohmann::json::parse(text);
  AnnotationSet anns;
  for (const auto& c : doc.at("categories")) {
    anns.categories.push_back(c.get<std::string>());
  }
  for (const auto& i : doc.at("images")) {
    anns.images.push_back({i.at("image_id").get<int>(),
                           i.at("path").get<std::string>(),
                           i.at("width").get<int>(),
                           i.at("height").get<int>()});
  }
  for (const auto& g : doc.at("ground_truths")) {
    const std::string cls = g.at("class").get<std::string>();
    const int id = anns.category_id(cls);
    if (id < 0) {
      throw std::runtime_error("ground truth uses undeclared class \"" + cls +
                               "\"");
    }
    anns.ground_truths.push_back(
        {box_from_record(g), id, g.at("image_id").get<int>()});
  }
  anns.validate();
  return anns;
}

std::string annotations_to_json_text(const AnnotationSet& anns) {
  anns.validate();
  nlohmann::json doc;
  doc["categories"] = anns.categories;
  doc["images"] = nlohmann::json::array();
  for (const auto& i : anns.images) {
    doc["images"].push_back({{"image_id", i.image_id},
                             {"path", i.path},
                             {"width", i.width},
                             {"height", i.height}});
  }
  doc["ground_truths"] = nlohmann::json::array();
  for (const auto& g : anns.ground_truths) {
    nlohmann::json r;
    r["image_id"] = g.image_id;
    r["class"] = anns.categories[g.class_id];
    box_to_record(g.box, r);
    doc["ground_truths"].push_back(r);
  }
  return doc.dump(2) + "\n";
}

AnnotationSet load_annotations(const std::string& path) {
  try {
    return annotations_from_json_text(slurp(path));
  } catch (const std::exception& ex) {
    throw std::runtime_error("annotations " + path + ": " + ex.what());
  }
}

void save_annotations(const std::string& path, const AnnotationSet& anns) {
  spit(path, annotations_to_json_text(anns));
}

std::vector<DetectionRecord> detections_from_json_text(
    const std::string& text, const AnnotationSet& anns) {
  const auto doc = nlohmann::json::parse(text);
  std::set<int> image_ids;
  for (const auto& img : anns.images) image_ids.insert(img.image_id);

  std::vector<DetectionRecord> dets;
  for (const auto& d : doc.at("detections")) {
    const std::string cls = d.at("class").get<std::string>();
    const int id = anns.category_id(cls);
    if (id < 0) {
      throw std::runtime_error("detection uses undeclared class \"" + cls +
                               "\"");
    }
    DetectionRecord rec;
    rec.box = box_from_record(d);
    rec.class_id = id;
    rec.image_id = d.at("image_id").get<int>();
    rec.score = d.at("score").get<double>();
    if (!image_ids.count(rec.image_id)) {
      throw std::runtime_error("detection references unknown image_id " +
                               std::to_string(rec.image_id));
    }
    if (!(rec.box.w > 0.0 && rec.box.h > 0.0)) {
      throw std::runtime_error("detection box must satisfy x_min < x_max " +
                               std::string("and y_min < y_max"));
    }
    if (!(rec.score >= 0.0 && rec.score <= 1.0)) {
      throw std::runtime_error("detection score must lie in [0, 1]");
    }
    dets.push_back(rec);
  }
  return dets;
}

std::string detections_to_json_text(const std::vector<DetectionRecord>& dets,
                                    const AnnotationSet& anns) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& d : dets) {
    if (d.class_id < 0 ||
        d.class_id >= static_cast<int>(anns.categories.size())) {
      throw std::runtime_error("detection has an unknown class id");
    }
    nlohmann::json r;
    r["image_id"] = d.image_id;
    r["class"] = anns.categories[d.class_id];
    box_to_record(d.box, r);
    r["score"] = d.score;
    arr.push_back(r);
  }
  nlohmann::json doc;
  doc["detections"] = arr;
  return doc.dump(2) + "\n";
}

std::vector<DetectionRecord> load_detections(const std::string& path,
                                             const AnnotationSet& anns) {
  try {
    return detections_from_json_text(slurp(path), anns);
  } catch (const std::exception& ex) {
    throw std::runtime_error("detections " + path + ": " + ex.what());
  }
}

void save_detections(const std::string& path,
                     const std::vector<DetectionRecord>& dets,
                     const AnnotationSet& anns) {
  spit(path, detections_to_json_text(dets, anns));
}

}  // namespace afpnkit
