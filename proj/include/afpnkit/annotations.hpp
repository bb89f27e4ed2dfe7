#pragma once

#include <string>
#include <vector>

#include "afpnkit/metrics.hpp"

namespace afpnkit {

struct ImageInfo {
  int image_id = 0;
  std::string path;
  int width = 0;
  int height = 0;
};

/// Single-document annotation interchange: a category list (class_id is
/// the index into it), the image table, and corner-form ground truths.
struct AnnotationSet {
  std::vector<std::string> categories;
  std::vector<ImageInfo> images;
  std::vector<GroundTruth> ground_truths;

  int category_id(const std::string& name) const;  // -1 when unknown
  const ImageInfo& image(int image_id) const;      // throws when unknown

  /// Unique positive-size images, unique non-empty categories, every
  /// ground truth inside its image with x_min < x_max, y_min < y_max and a
  /// known class. Throws std::runtime_error naming the offender.
  void validate() const;
};

/// Document shape:
/// {"categories": [...names...],
///  "images": [{"image_id", "path", "width", "height"}, ...],
///  "ground_truths": [{"image_id", "class",
///                     "x_min", "y_min", "x_max", "y_max"}, ...]}
AnnotationSet annotations_from_json_text(const std::string& text);
std::string annotations_to_json_text(const AnnotationSet& anns);
AnnotationSet load_annotations(const std::string& path);
void save_annotations(const std::string& path, const AnnotationSet& anns);

/// Detections document: {"detections": [{"image_id", "class", "x_min",
/// "y_min", "x_max", "y_max", "score"}, ...]}. Class names and image ids
/// are validated against `anns`.
std::vector<DetectionRecord> detections_from_json_text(
    const std::string& text, const AnnotationSet& anns);
std::string detections_to_json_text(const std::vector<DetectionRecord>& dets,
                                    const AnnotationSet& anns);
std::vector<DetectionRecord> load_detections(const std::string& path,
                                             const AnnotationSet& anns);
void save_detections(const std::string& path,
                     const std::vector<DetectionRecord>& dets,
                     const AnnotationSet& anns);

}  // namespace afpnkit
