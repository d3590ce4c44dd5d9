#pragma once

#include "medq/image.hpp"

namespace medq::degrade {

/// Modified (Toft) Shepp-Logan head phantom, gray, values in [0,1].
/// `oversample` > 1 averages oversample² sub-pixel samples per pixel.
Image shepp_logan(int size, int oversample = 1);

/// Centered disk of the given radius (pixels) and value, with area-coverage anti-aliasing.
Image disk_phantom(int size, double radius, double value = 1.0, int oversample = 8);

}  // namespace medq::degrade
