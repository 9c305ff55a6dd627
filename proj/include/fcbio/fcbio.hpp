#pragma once

// Convenience include for the whole library.

#include "fcbio/core.hpp"
#include "fcbio/geometry.hpp"
#include "fcbio/data.hpp"
#include "fcbio/problems.hpp"
#include "fcbio/subroutines.hpp"
#include "fcbio/driver.hpp"
#include "fcbio/verify.hpp"
#include "fcbio/experiments.hpp"
