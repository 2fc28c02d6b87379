#pragma once

#include <string>

#include "pwb/panel.hpp"

namespace pwb {

// Long-format panel file with header i,t,y,x1,...,xK[,loc_x,loc_y].
// Unit and period indices are 1-based and every cell must appear exactly
// once. Missing location columns fall back to unit-lattice placement.
PanelData load_panel_csv(const std::string& path);

// Same fields as the CSV, as a JSON array of row objects.
PanelData load_panel_json(const std::string& path);

// Dispatch on the .json extension, else CSV.
PanelData load_panel(const std::string& path);

void write_panel_csv(const PanelData& panel, const std::string& path);

}  // namespace pwb
