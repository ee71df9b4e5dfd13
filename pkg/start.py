import sys

from intransitive_dice_lab.main import main

if "__main__" == __name__:
    sys.exit(main(sys.argv))
