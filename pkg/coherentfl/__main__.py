import sys

from coherentfl.cli import main

sys.exit(main())
