#pragma once

#include <string>

namespace clickmask {

/// One annotator click: x is the pixel column, y the pixel row.
struct Click {
    std::string image_id;
    int x = 0;
    int y = 0;
    friend bool operator==(const Click&, const Click&) = default;
};

}  // namespace clickmask
