#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "lumen/geometry.hpp"
#include "lumen/qlearning.hpp"

namespace lumen::render {

struct RenderOptions {
  double scale = 40.0;   // pixels per world unit
  double margin = 1.0;   // world units of padding around the scene
  double sample_ds = 0.05;  // wall polyline sampling step (world units)

  void validate() const;
};

// One robot pose to draw on top of the map. Empty joints = map only.
struct Frame {
  std::vector<Vec2> joints;
  double energy = 0.0;
  long step = -1;  // >= 0 adds a caption
};

// Standalone SVG document: lumen walls, centerline, goal disk and the robot.
// World geometry is emitted raw inside a y-flipping group transform.
std::string render_svg(const geom::LumenMap& map, const Frame& frame,
                       const RenderOptions& opts = {});

// Writes frame_NNNNN.svg into out_dir for every `every`-th traced step plus
// the final one. Steps without snapshots are skipped. Returns the number of
// files written.
int render_trajectory(const geom::LumenMap& map, const std::vector<rl::TraceStep>& trace,
                      const std::filesystem::path& out_dir, int every,
                      const RenderOptions& opts = {});

}  // namespace lumen::render
