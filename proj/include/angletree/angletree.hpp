#pragma once

#include "analysis.hpp"
#include "dataset.hpp"
#include "geometry.hpp"
#include "search.hpp"
#include "tree.hpp"
