#pragma once

#include "wgmol/units.hpp"
#include "wgmol/errors.hpp"
#include "wgmol/molecule.hpp"
#include "wgmol/couplings.hpp"
#include "wgmol/scattering.hpp"
#include "wgmol/raman.hpp"
#include "wgmol/lindblad.hpp"
#include "wgmol/mode_match.hpp"
#include "wgmol/correlation.hpp"
#include "wgmol/moments.hpp"
#include "wgmol/shots.hpp"
#include "wgmol/spectroscopy.hpp"
#include "wgmol/io.hpp"
#include "wgmol/config.hpp"
#include "wgmol/tasks.hpp"
