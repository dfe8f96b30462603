"""Allow ``python -m glue_regularity``"""

import sys

from .cli import main

sys.exit(main())
