#pragma once

#include "design.hpp"
#include "errors.hpp"
#include "hash.hpp"
#include "io.hpp"
#include "materials.hpp"
#include "network.hpp"
#include "presets.hpp"
#include "quantum.hpp"
#include "rcwa.hpp"
#include "thermal.hpp"
#include "tmm.hpp"
