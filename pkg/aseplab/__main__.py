from aseplab.main import main

raise SystemExit(main())
