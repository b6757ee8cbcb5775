#pragma once

#include "filtrationlab/lattice/calculus.hpp"
#include "filtrationlab/lattice/girsanov.hpp"
#include "filtrationlab/lattice/process.hpp"
#include "filtrationlab/lattice/space.hpp"
