#pragma once

#include "sqg/domain.hpp"
#include "sqg/field.hpp"
#include "sqg/transform.hpp"
#include "sqg/operators.hpp"
#include "sqg/checkpoint.hpp"
#include "sqg/forcing.hpp"
#include "sqg/littlewood_paley.hpp"
#include "sqg/solver.hpp"
#include "sqg/degiorgi.hpp"
#include "sqg/attractor.hpp"
