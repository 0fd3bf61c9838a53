import sys

from src.orchestrator.main import main

sys.exit(main())
