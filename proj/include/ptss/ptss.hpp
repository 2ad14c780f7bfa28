#pragma once

#include "ptss/rational.hpp"
#include "ptss/term.hpp"
#include "ptss/distribution.hpp"
#include "ptss/rule.hpp"
#include "ptss/parser.hpp"
#include "ptss/pts.hpp"
#include "ptss/model.hpp"
#include "ptss/relation.hpp"
#include "ptss/lifting.hpp"
#include "ptss/simplex.hpp"
#include "ptss/weak.hpp"
#include "ptss/scheduler.hpp"
#include "ptss/bisim.hpp"
#include "ptss/format.hpp"
#include "ptss/congruence.hpp"
