// Single translation unit pulling in every public header; keeps the whole
// library compiling as one unit and anchors the static library target.
#include "gel/activation.hpp"
#include "gel/config.hpp"
#include "gel/diagnostics.hpp"
#include "gel/erm.hpp"
#include "gel/io.hpp"
#include "gel/lab.hpp"
#include "gel/loo.hpp"
#include "gel/losses.hpp"
#include "gel/quadrature.hpp"
#include "gel/rf_models.hpp"
#include "gel/rng.hpp"
#include "gel/smoothing.hpp"
#include "gel/types.hpp"
#include "gel/version.hpp"

namespace gel {

const char* version() { return kVersion; }

}  // namespace gel
