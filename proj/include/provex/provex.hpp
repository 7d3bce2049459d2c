#pragma once

#include "provex/csv.hpp"
#include "provex/dtree.hpp"
#include "provex/error.hpp"
#include "provex/eval.hpp"
#include "provex/features.hpp"
#include "provex/glossary.hpp"
#include "provex/graph.hpp"
#include "provex/oracle.hpp"
#include "provex/parallel.hpp"
#include "provex/rng.hpp"
#include "provex/security.hpp"
#include "provex/structural.hpp"
#include "provex/surrogate.hpp"
#include "provex/synth.hpp"
