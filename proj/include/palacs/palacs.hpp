#pragma once

#include "palacs/error.hpp"
#include "palacs/seed.hpp"
#include "palacs/gain.hpp"
#include "palacs/kernel.hpp"
#include "palacs/strategies.hpp"
#include "palacs/data.hpp"
#include "palacs/harness.hpp"
#include "palacs/io.hpp"
