// Copyright 2026 The Imagine Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "imagine/error.hpp"
#include "imagine/tasks.hpp"
#include "tasks/internal.hpp"

namespace imagine {

namespace {

constexpr Rgba kCanvasFill = {70, 70, 70, 255};
constexpr Rgba kHoleFill = {0, 0, 0, 255};

Image resample(const Image& src, int w, int h) {
  Image out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      out.set(x, y, src.at(x * src.width() / w, y * src.height() / h));
    }
  }
  return out;
}

PixelPoint cell_location(int cell, PixelPoint offset) {
  ObjectLayer l;
  l.mask = Mask(cell, cell, true);
  l.offset = offset;
  return l.location();
}

class JigsawHooks final : public TaskHooks {
 public:
  explicit JigsawHooks(const JigsawInstance& inst)
      : pieces_(inst.pieces), radius_(inst.snap_radius), cap_(inst.attempts_budget) {}

  std::optional<std::string> after_action(const Action& a, Scene2D& scene, SceneEvent& ev) override {
    if (a.kind == ActionKind::AcceptFocus && ev.kind == "accepted") {
      held_ = scene.focus.id;
      if (const ObjectLayer* l = scene.find_layer(held_)) ev.subject = static_cast<int>(l->label);
      return std::nullopt;
    }
    if (a.kind != ActionKind::ReleaseObject || ev.kind != "released" || held_ == 0) return std::nullopt;

    const LayerId id = std::exchange(held_, 0);
    ObjectLayer* layer = nullptr;
    for (auto& l : scene.layers) {
      if (l.id == id) layer = &l;
    }
    const JigsawPiece* piece = nullptr;
    for (const auto& p : pieces_) {
      if (layer && p.id == static_cast<int>(layer->label)) piece = &p;
    }
    if (!piece) return std::nullopt;
    ++attempts_;
    ev.subject = piece->id;
    const PixelPoint at = layer->location();
    if (std::hypot(at.x - piece->slot_center.x, at.y - piece->slot_center.y) <= radius_) {
      layer->offset = piece->slot_offset;
      ev = {"snapped", "The piece snapped into its slot.", true, piece->id};
    } else {
      ev = {"unsnapped", "The piece is not close enough to a matching slot and stays where it is.", ev.mutated,
            piece->id};
    }
    if (attempts_ >= cap_) {
      bool all = true;
      for (const auto& p : pieces_) {
        bool placed = false;
        for (const auto& l : scene.layers) {
          placed |= l.visible && l.label == static_cast<std::uint32_t>(p.id) && l.offset == p.slot_offset;
        }
        all &= placed;
      }
      if (!all) return "placement attempt budget of " + std::to_string(cap_) + " used up";
    }
    return std::nullopt;
  }

 private:
  std::vector<JigsawPiece> pieces_;
  double radius_;
  int cap_;
  int attempts_ = 0;
  LayerId held_ = 0;
};

}  // namespace

void validate_jigsaw_params(int rows, int cols, int n_missing) {
  if (rows < 3 || rows > 32) throw Error(ErrorCode::InvalidArgument, "rows must be in [3, 32]");
  if (cols < 3 || cols > 32) throw Error(ErrorCode::InvalidArgument, "cols must be in [3, 32]");
  if (n_missing < 1 || n_missing > rows * cols) {
    throw Error(ErrorCode::InvalidArgument, "n_missing must be in [1, rows * cols]");
  }
}

Image synth_jigsaw_source(std::uint64_t seed, int width, int height) {
  Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  Image img(width, height);
  const double a = rng.uniform(0, 2 * std::numbers::pi);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double u = static_cast<double>(x) / width;
      const double v = static_cast<double>(y) / height;
      img.set(x, y,
              {static_cast<std::uint8_t>(60 + 150 * u), static_cast<std::uint8_t>(80 + 120 * v),
               static_cast<std::uint8_t>(120 + 80 * std::sin(a + 6 * u * v)), 255});
    }
  }
  const auto& colors = palette();
  const int blobs = std::max(4, width * height / 2500);
  for (int i = 0; i < blobs; ++i) {
    const auto shape = static_cast<ShapeKind>(rng.uniform_int(0, 2));
    const double size = rng.uniform(16, 48);
    const Mask m = rasterize_shape(shape, rng.uniform(0, width), rng.uniform(0, height), size,
                                   rng.uniform(0, std::numbers::pi), width, height);
    detail::paint_object(img, m, colors[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(colors.size()) - 1))].rgba);
  }
  return img;
}

JigsawInstance gen_jigsaw(std::uint64_t seed, int rows, int cols, int n_missing, const Image* source,
                          const JigsawOptions& opts) {
  validate_jigsaw_params(rows, cols, n_missing);
  if (opts.cell < 8) throw Error(ErrorCode::InvalidArgument, "cell must be at least 8");
  if (opts.tray_gap < 4) throw Error(ErrorCode::InvalidArgument, "tray_gap must be at least 4");
  if (opts.attempts_budget < 1) throw Error(ErrorCode::InvalidArgument, "attempts_budget must be positive");

  const int cell = opts.cell;
  const int bw = cols * cell;
  const int bh = rows * cell;
  Rng rng(seed);

  JigsawInstance inst;
  inst.seed = seed;
  inst.rows = rows;
  inst.cols = cols;
  inst.cell = cell;
  inst.source = source ? (source->width() == bw && source->height() == bh ? *source : resample(*source, bw, bh))
                       : synth_jigsaw_source(seed, bw, bh);
  inst.snap_radius = 0.5 * cell;
  inst.attempts_budget = opts.attempts_budget;
  inst.step_budget = opts.actions_per_piece * n_missing;

  std::vector<int> cells(static_cast<std::size_t>(rows * cols));
  for (std::size_t i = 0; i < cells.size(); ++i) cells[i] = static_cast<int>(i);
  rng.shuffle(cells);
  cells.resize(static_cast<std::size_t>(n_missing));
  std::vector<int> tray_order(static_cast<std::size_t>(n_missing));
  for (int i = 0; i < n_missing; ++i) tray_order[static_cast<std::size_t>(i)] = i;
  rng.shuffle(tray_order);

  const int tray_x = bw + opts.tray_gap;
  const int width = tray_x + cell + opts.tray_gap;
  const int height = std::max(bh, n_missing * (cell + opts.tray_gap) - opts.tray_gap);
  inst.base = Image(width, height, kCanvasFill);
  inst.labels = LabelMap(width, height);
  for (int y = 0; y < bh; ++y) {
    for (int x = 0; x < bw; ++x) inst.base.set(x, y, inst.source.at(x, y));
  }

  for (int i = 0; i < n_missing; ++i) {
    const int c = cells[static_cast<std::size_t>(i)];
    JigsawPiece p;
    p.id = i + 1;
    p.row = c / cols;
    p.col = c % cols;
    p.slot_offset = {p.col * cell, p.row * cell};
    p.tray_offset = {tray_x, tray_order[static_cast<std::size_t>(i)] * (cell + opts.tray_gap)};
    p.slot_center = cell_location(cell, p.slot_offset);
    for (int dy = 0; dy < cell; ++dy) {
      for (int dx = 0; dx < cell; ++dx) {
        inst.base.set(p.tray_offset.x + dx, p.tray_offset.y + dy, inst.source.at(p.slot_offset.x + dx, p.slot_offset.y + dy));
        inst.base.set(p.slot_offset.x + dx, p.slot_offset.y + dy, kHoleFill);
        inst.labels.set(p.tray_offset.x + dx, p.tray_offset.y + dy, static_cast<std::uint32_t>(p.id));
      }
    }
    inst.pieces.push_back(p);
  }
  return inst;
}

std::string jigsaw_plan() {
  return "Complete the jigsaw puzzle. The board on the left has black holes; the loose pieces sit in the tray on "
         "the right.\n"
         "1. Move the cursor onto a piece in the tray and FOCUS, then ACCEPT the outline.\n"
         "2. Move the piece over the hole where it fits and RELEASE it. A piece dropped close to its hole snaps in.\n"
         "3. Repeat for every piece, then ANSWER: done.";
}

std::optional<PixelPoint> snap(const JigsawInstance& inst, int piece_id, PixelPoint location) {
  for (const auto& p : inst.pieces) {
    if (p.id != piece_id) continue;
    if (std::hypot(location.x - p.slot_center.x, location.y - p.slot_center.y) <= inst.snap_radius) {
      return p.slot_center;
    }
    return std::nullopt;
  }
  throw Error(ErrorCode::InvalidArgument, "no piece with id " + std::to_string(piece_id));
}

std::unique_ptr<TaskHooks> make_jigsaw_hooks(const JigsawInstance& inst) {
  return std::make_unique<JigsawHooks>(inst);
}

int jigsaw_completed(const JigsawInstance& inst, const Scene2D& scene) {
  int n = 0;
  for (const auto& p : inst.pieces) {
    for (const auto& l : scene.layers) {
      if (l.visible && l.label == static_cast<std::uint32_t>(p.id) && l.offset == p.slot_offset) {
        ++n;
        break;
      }
    }
  }
  return n;
}

int jigsaw_completed_from_trace(const std::vector<TraceRecord>& records) {
  std::map<int, bool> in_slot;
  for (const auto& r : records) {
    if (r.event.subject == 0) continue;
    if (r.event.kind == "snapped") in_slot[r.event.subject] = true;
    if (r.event.kind == "unsnapped" || r.event.kind == "accepted") in_slot[r.event.subject] = false;
  }
  return static_cast<int>(std::count_if(in_slot.begin(), in_slot.end(), [](const auto& kv) { return kv.second; }));
}

JigsawMetrics score_jigsaw(const std::vector<std::pair<int, int>>& per_instance) {
  JigsawMetrics m;
  for (const auto& [snapped, missing] : per_instance) {
    if (snapped < 0 || missing < 0 || snapped > missing) {
      throw Error(ErrorCode::InvalidArgument, "snapped must be in [0, missing]");
    }
    m.snapped += snapped;
    m.missing += missing;
  }
  m.completion_rate = m.missing > 0 ? static_cast<double>(m.snapped) / m.missing : 0.0;
  return m;
}

}  // namespace imagine
